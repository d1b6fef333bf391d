#pragma once

// Piecewise-constant-curvature forward kinematics of the four-segment
// pneumatic arm. Units: mm, kPa, radians.

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "hpnq/errors.hpp"

namespace hpnq {

inline constexpr std::size_t kSegmentCount = 4;
inline constexpr std::size_t kChamberCount = 4;
inline constexpr std::size_t kPressureCount = kSegmentCount * kChamberCount;

struct ArmParams {
  double curvature_gain = 1.75e-4;  // A, (1/mm)/kPa
  double elongation_gain = 0.25;    // B, mm/kPa
  double rest_length = 150.0;       // L0, mm
  double max_pressure = 60.0;       // kPa
  double straight_eps = 1e-9;       // curvature below which a segment is straight, 1/mm

  void validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(curvature_gain) || curvature_gain <= 0.0)
      throw DomainError("arm: curvature gain must be > 0");
    if (!finite(elongation_gain) || elongation_gain < 0.0)
      throw DomainError("arm: elongation gain must be >= 0");
    if (!finite(rest_length) || rest_length <= 0.0) throw DomainError("arm: rest length must be > 0");
    if (!finite(max_pressure) || max_pressure <= 0.0) throw DomainError("arm: max pressure must be > 0");
    if (!finite(straight_eps) || straight_eps <= 0.0)
      throw DomainError("arm: straight-segment threshold must be > 0");
  }
};

// Pressures of the four airbag groups of one segment, P1..P4.
using SegmentPressures = std::array<double, kChamberCount>;

// All sixteen chamber pressures, segment-major.
class PressureVector {
 public:
  PressureVector() { values_.fill(0.0); }
  explicit PressureVector(const std::array<double, kPressureCount>& values) : values_(values) {}

  static PressureVector uniform(double p) {
    PressureVector v;
    v.values_.fill(p);
    return v;
  }

  double& operator()(std::size_t segment, std::size_t chamber) { return values_[segment * kChamberCount + chamber]; }
  double operator()(std::size_t segment, std::size_t chamber) const {
    return values_[segment * kChamberCount + chamber];
  }

  SegmentPressures segment(std::size_t s) const {
    return {values_[s * kChamberCount], values_[s * kChamberCount + 1], values_[s * kChamberCount + 2],
            values_[s * kChamberCount + 3]};
  }

  const std::array<double, kPressureCount>& values() const { return values_; }

  // Throws DomainError naming the first chamber outside [0, max_pressure].
  void check_range(double max_pressure) const {
    for (std::size_t i = 0; i < kPressureCount; ++i) {
      const double p = values_[i];
      if (!std::isfinite(p) || p < 0.0 || p > max_pressure) {
        std::ostringstream msg;
        msg << "pressure out of range at segment " << i / kChamberCount << " chamber " << i % kChamberCount << ": "
            << p << " kPa (allowed 0.." << max_pressure << ")";
        throw DomainError(msg.str());
      }
    }
  }

  friend bool operator==(const PressureVector&, const PressureVector&) = default;

 private:
  std::array<double, kPressureCount> values_;
};

// Configuration-space description of one constant-curvature segment.
struct SegmentConfig {
  double curvature = 0.0;  // K, 1/mm
  double phi = 0.0;        // bending-plane angle, [-pi, pi)
  double length = 0.0;     // arc length, mm
};

// Rigid homogeneous transform. Translation in mm.
class Pose {
 public:
  Pose() : m_(Eigen::Matrix4d::Identity()) {}
  explicit Pose(const Eigen::Matrix4d& m) : m_(m) {}

  static Pose translation(const Eigen::Vector3d& t) {
    Pose p;
    p.m_.block<3, 1>(0, 3) = t;
    return p;
  }

  const Eigen::Matrix4d& matrix() const { return m_; }
  Eigen::Matrix3d rotation() const { return m_.block<3, 3>(0, 0); }
  Eigen::Vector3d position() const { return m_.block<3, 1>(0, 3); }

  Pose operator*(const Pose& rhs) const {
    Pose out(m_ * rhs.m_);
    out.m_.row(3) << 0.0, 0.0, 0.0, 1.0;
    return out;
  }

 private:
  Eigen::Matrix4d m_;
};

// Bending direction basis of the airbag layout: e1 at -45 deg, e2 at +45 deg.
inline Eigen::Vector2d bending_axis_e1() { return {std::numbers::sqrt2 / 2.0, -std::numbers::sqrt2 / 2.0}; }
inline Eigen::Vector2d bending_axis_e2() { return {std::numbers::sqrt2 / 2.0, std::numbers::sqrt2 / 2.0}; }

// Maps one segment's pressures to (K, phi, L). The bending vector is
// v = (P1 - P3) e1 + (P2 - P4) e2; K = A |v|, phi = atan2(v), L = B sum(P) + L0.
inline SegmentConfig actuation_to_config(const SegmentPressures& p, const ArmParams& params) {
  for (std::size_t c = 0; c < kChamberCount; ++c) {
    if (!std::isfinite(p[c]) || p[c] < 0.0 || p[c] > params.max_pressure) {
      std::ostringstream msg;
      msg << "pressure out of range at chamber " << c << ": " << p[c] << " kPa";
      throw DomainError(msg.str());
    }
  }
  const Eigen::Vector2d v = (p[0] - p[2]) * bending_axis_e1() + (p[1] - p[3]) * bending_axis_e2();
  const double norm = v.norm();

  SegmentConfig c;
  c.length = params.elongation_gain * (p[0] + p[1] + p[2] + p[3]) + params.rest_length;
  if (norm < 1e-12) return c;  // zero bending vector: straight, phi = 0
  c.curvature = params.curvature_gain * norm;
  c.phi = std::atan2(v.y(), v.x());
  if (c.phi >= std::numbers::pi) c.phi -= 2.0 * std::numbers::pi;
  return c;
}

// Constant-curvature arc transform. Below `straight_eps` the analytic K -> 0
// limit is used: identity rotation, translation (0, 0, L).
inline Pose segment_transform(const SegmentConfig& c, double straight_eps = 1e-9) {
  if (c.curvature < straight_eps) return Pose::translation({0.0, 0.0, c.length});

  const double k = c.curvature;
  const double theta = k * c.length;
  const double cp = std::cos(c.phi);
  const double sp = std::sin(c.phi);
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  // 1 - cos(theta) without cancellation for small theta.
  const double vers = 2.0 * std::sin(theta / 2.0) * std::sin(theta / 2.0);

  Eigen::Matrix4d m;
  m << cp * cp * (ct - 1.0) + 1.0, sp * cp * (ct - 1.0), cp * st, cp * vers / k,
       sp * cp * (ct - 1.0), cp * cp * vers + ct, sp * st, sp * vers / k,
       -cp * st, -sp * st, ct, st / k,
       0.0, 0.0, 0.0, 1.0;
  return Pose(m);
}

// Base-to-tip product T1 T2 T3 T4.
inline Pose arm_forward_kinematics(const PressureVector& p, const ArmParams& params) {
  p.check_range(params.max_pressure);
  Pose pose;
  for (std::size_t s = 0; s < kSegmentCount; ++s) {
    pose = pose * segment_transform(actuation_to_config(p.segment(s), params), params.straight_eps);
  }
  return pose;
}

// Tip pointing direction: the z column of the rotation block.
inline Eigen::Vector3d pose_to_direction(const Pose& pose) { return pose.matrix().block<3, 1>(0, 2); }

}  // namespace hpnq
