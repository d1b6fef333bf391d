#pragma once

// Ten-dimensional goal/tip state and its 4-bins-per-dimension discretization.
//
// Dims 0..4 describe the goal relative to the workspace origin, dims 5..9 the
// tip relative to the goal. The packed index puts dim 0 in the most
// significant base-4 digit, so the top ten bits of an index are the goal bin.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

#include "hpnq/errors.hpp"
#include "hpnq/kinematics.hpp"

namespace hpnq {

inline constexpr std::size_t kStateDims = 10;
inline constexpr std::size_t kGoalDims = 5;
inline constexpr std::uint32_t kBinsPerDim = 4;
inline constexpr std::uint32_t kStateCount = 1u << (2 * kStateDims);  // 4^10
inline constexpr std::uint32_t kGoalBinCount = 1u << (2 * kGoalDims);  // 4^5
inline constexpr std::uint32_t kTipSuffixCount = kStateCount / kGoalBinCount;

using StateIndex = std::uint32_t;
using GoalBin = std::uint32_t;

struct Spherical {
  double radius = 0.0;
  double azimuth = 0.0;    // [-pi, pi)
  double elevation = 0.0;  // [0, pi], measured from +z
};

inline double wrap_azimuth(double a) {
  if (a >= std::numbers::pi) a -= 2.0 * std::numbers::pi;
  if (a < -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

inline Spherical spherical_of(const Eigen::Vector3d& v) {
  const double r = v.norm();
  if (r < 1e-12) return {};
  Spherical s;
  s.radius = r;
  s.azimuth = wrap_azimuth(std::atan2(v.y(), v.x()));
  s.elevation = std::acos(std::clamp(v.z() / r, -1.0, 1.0));
  return s;
}

struct GoalPose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();      // mm, world frame
  Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();    // unit

  static GoalPose from_pose(const Pose& pose) { return {pose.position(), pose_to_direction(pose)}; }
};

struct ContinuousState {
  double goal_distance = 0.0;
  double goal_azimuth = 0.0;
  double goal_elevation = 0.0;
  double goal_dir_azimuth = 0.0;
  double goal_dir_elevation = 0.0;
  double tip_distance = 0.0;
  double tip_azimuth = 0.0;
  double tip_elevation = 0.0;
  double tip_dir_azimuth = 0.0;
  double tip_dir_elevation = 0.0;

  std::array<double, kStateDims> as_array() const {
    return {goal_distance, goal_azimuth,  goal_elevation,  goal_dir_azimuth, goal_dir_elevation,
            tip_distance,  tip_azimuth,   tip_elevation,   tip_dir_azimuth,  tip_dir_elevation};
  }
};

// Orthonormal frame whose z axis is `z`. The x axis is world-x made
// orthogonal to z, or world-y when z is within ~8 deg of world-x.
inline Eigen::Matrix3d frame_about(const Eigen::Vector3d& z) {
  const Eigen::Vector3d ez = z.normalized();
  Eigen::Vector3d ref = Eigen::Vector3d::UnitX();
  if (std::abs(ez.dot(ref)) > 0.99) ref = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d ex = (ref - ref.dot(ez) * ez).normalized();
  const Eigen::Vector3d ey = ez.cross(ex);
  Eigen::Matrix3d f;
  f.col(0) = ex;
  f.col(1) = ey;
  f.col(2) = ez;
  return f;
}

// The goal half of the state only depends on the goal and the origin.
inline void fill_goal_dims(ContinuousState& cs, const GoalPose& goal, const Eigen::Vector3d& origin) {
  const Spherical g = spherical_of(goal.position - origin);
  const Spherical gd = spherical_of(goal.direction);
  cs.goal_distance = g.radius;
  cs.goal_azimuth = g.azimuth;
  cs.goal_elevation = g.elevation;
  cs.goal_dir_azimuth = gd.azimuth;
  cs.goal_dir_elevation = gd.elevation;
}

// Tip displacement is tip - goal on world axes; tip orientation is the tip
// direction expressed in frame_about(goal.direction).
inline ContinuousState continuous_state(const GoalPose& goal, const Pose& tip, const Eigen::Vector3d& origin) {
  ContinuousState cs;
  fill_goal_dims(cs, goal, origin);

  const Spherical d = spherical_of(tip.position() - goal.position);
  cs.tip_distance = d.radius;
  cs.tip_azimuth = d.azimuth;
  cs.tip_elevation = d.elevation;

  const Eigen::Vector3d rel = frame_about(goal.direction).transpose() * pose_to_direction(tip);
  const Spherical e = spherical_of(rel);
  cs.tip_dir_azimuth = e.azimuth;
  cs.tip_dir_elevation = e.elevation;
  return cs;
}

// Five edges per dim: lo, three interior edges, hi. Intervals are
// [e_i, e_{i+1}); values below lo go to bin 0 and values >= e3 to bin 3.
using BinEdges = std::array<double, kBinsPerDim + 1>;

inline BinEdges even_edges(double lo, double hi) {
  const double w = (hi - lo) / kBinsPerDim;
  return {lo, lo + w, lo + 2 * w, lo + 3 * w, hi};
}

struct BinningSpec {
  std::array<BinEdges, kStateDims> edges;

  // d_max in mm; d_tip interior edges in mm; goal direction elevation
  // interior edges in radians.
  static BinningSpec make(double d_max = 400.0, std::array<double, 3> tip_distance_edges = {5.0, 30.0, 60.0},
                          std::array<double, 3> goal_dir_elevation_edges = {5.0 * std::numbers::pi / 180.0,
                                                                            20.0 * std::numbers::pi / 180.0,
                                                                            60.0 * std::numbers::pi / 180.0}) {
    constexpr double pi = std::numbers::pi;
    const double inf = std::numeric_limits<double>::infinity();
    BinningSpec spec;
    spec.edges[0] = even_edges(0.0, d_max);
    spec.edges[1] = even_edges(-pi, pi);
    spec.edges[2] = even_edges(0.0, pi);
    spec.edges[3] = even_edges(-pi, pi);
    spec.edges[4] = {0.0, goal_dir_elevation_edges[0], goal_dir_elevation_edges[1], goal_dir_elevation_edges[2], pi};
    spec.edges[5] = {0.0, tip_distance_edges[0], tip_distance_edges[1], tip_distance_edges[2], inf};
    spec.edges[6] = even_edges(-pi, pi);
    spec.edges[7] = even_edges(0.0, pi);
    spec.edges[8] = even_edges(-pi, pi);
    spec.edges[9] = even_edges(0.0, pi);
    spec.validate();
    return spec;
  }

  void validate() const {
    for (std::size_t d = 0; d < kStateDims; ++d) {
      for (std::size_t i = 0; i + 1 < edges[d].size(); ++i) {
        if (!(edges[d][i] < edges[d][i + 1])) throw ConfigError("binning: edges must be strictly increasing");
      }
    }
    for (std::size_t d : {0, 2, 4, 5, 7, 9}) {
      if (edges[d][0] != 0.0) throw ConfigError("binning: radial and elevation dims must start at 0");
    }
  }

  std::uint32_t bin_of(std::size_t dim, double value) const {
    const BinEdges& e = edges[dim];
    std::uint32_t b = 0;
    for (std::uint32_t i = 1; i < kBinsPerDim; ++i) {
      if (value >= e[i]) b = i;
    }
    return b;
  }
};

class DiscreteState {
 public:
  using Bins = std::array<std::uint8_t, kStateDims>;

  DiscreteState() { bins_.fill(0); }

  explicit DiscreteState(const Bins& bins) : bins_(bins) {
    for (auto b : bins_) {
      if (b >= kBinsPerDim) throw DomainError("state bin index out of range");
    }
  }

  static DiscreteState unpack(StateIndex index) {
    if (index >= kStateCount) throw DomainError("state index out of range");
    Bins bins;
    for (std::size_t i = 0; i < kStateDims; ++i) {
      bins[kStateDims - 1 - i] = static_cast<std::uint8_t>(index & 3u);
      index >>= 2;
    }
    return DiscreteState(bins);
  }

  StateIndex index() const {
    StateIndex idx = 0;
    for (auto b : bins_) idx = idx * kBinsPerDim + b;
    return idx;
  }

  const Bins& bins() const { return bins_; }
  std::uint8_t operator[](std::size_t i) const { return bins_[i]; }

  friend bool operator==(const DiscreteState&, const DiscreteState&) = default;

 private:
  Bins bins_;
};

inline DiscreteState encode(const ContinuousState& cs, const BinningSpec& spec) {
  const auto values = cs.as_array();
  DiscreteState::Bins bins;
  for (std::size_t d = 0; d < kStateDims; ++d) bins[d] = static_cast<std::uint8_t>(spec.bin_of(d, values[d]));
  return DiscreteState(bins);
}

inline GoalBin goal_bin(StateIndex index) { return index / kTipSuffixCount; }
inline GoalBin goal_bin(const DiscreteState& ds) { return goal_bin(ds.index()); }
inline std::uint32_t tip_suffix(StateIndex index) { return index % kTipSuffixCount; }

// Goal bin of a goal pose alone; the tip half of the state is irrelevant.
inline GoalBin goal_bin_of(const GoalPose& goal, const Eigen::Vector3d& origin, const BinningSpec& spec) {
  ContinuousState cs;
  fill_goal_dims(cs, goal, origin);
  return goal_bin(encode(cs, spec));
}

}  // namespace hpnq
