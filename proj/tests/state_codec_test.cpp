#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "hpnq/state_codec.hpp"
#include "oracles/scratch_state.hpp"

namespace hpnq {
namespace {

constexpr double kPi = std::numbers::pi;

double angle_gap(double a, double b) {
  double d = std::fmod(std::abs(a - b), 2 * kPi);
  return std::min(d, 2 * kPi - d);
}

oracle::V3 v3(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

PressureVector random_pressures(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 60.0);
  std::array<double, kPressureCount> p;
  for (double& v : p) v = u(rng);
  return PressureVector(p);
}

TEST(SphericalOf, Examples) {
  const Spherical up = spherical_of({0, 0, 1});
  EXPECT_DOUBLE_EQ(up.radius, 1.0);
  EXPECT_DOUBLE_EQ(up.azimuth, 0.0);
  EXPECT_DOUBLE_EQ(up.elevation, 0.0);

  const Spherical x = spherical_of({1, 0, 0});
  EXPECT_DOUBLE_EQ(x.radius, 1.0);
  EXPECT_DOUBLE_EQ(x.azimuth, 0.0);
  EXPECT_NEAR(x.elevation, kPi / 2, 1e-15);

  const Spherical s = spherical_of({1, 1, std::sqrt(2.0)});
  EXPECT_NEAR(s.radius, 2.0, 1e-15);
  EXPECT_NEAR(s.azimuth, kPi / 4, 1e-15);
  EXPECT_NEAR(s.elevation, kPi / 4, 1e-15);
}

TEST(SphericalOf, ZeroVectorIsAllZero) {
  const Spherical z = spherical_of({0, 0, 0});
  EXPECT_EQ(z.radius, 0.0);
  EXPECT_EQ(z.azimuth, 0.0);
  EXPECT_EQ(z.elevation, 0.0);
}

TEST(SphericalOf, AzimuthHalfOpen) {
  EXPECT_EQ(spherical_of({-1, 0, 0}).azimuth, -kPi);
  EXPECT_EQ(spherical_of({-1, -0.0, 0}).azimuth, -kPi);
  EXPECT_EQ(wrap_azimuth(kPi), -kPi);
}

TEST(SphericalOf, RangesHold) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (int i = 0; i < 10000; ++i) {
    const Spherical s = spherical_of({n(rng), n(rng), n(rng)});
    EXPECT_GE(s.azimuth, -kPi);
    EXPECT_LT(s.azimuth, kPi);
    EXPECT_GE(s.elevation, 0.0);
    EXPECT_LE(s.elevation, kPi);
  }
}

TEST(ContinuousState, TipAtGoalHasZeroRelativePose) {
  const ArmParams params;
  const Eigen::Vector3d origin(0, 0, 600);
  PressureVector p;
  p(1, 0) = 35.0;
  p(3, 2) = 12.0;
  const Pose tip = arm_forward_kinematics(p, params);
  const ContinuousState cs = continuous_state(GoalPose::from_pose(tip), tip, origin);
  EXPECT_EQ(cs.tip_distance, 0.0);
  EXPECT_NEAR(cs.tip_dir_elevation, 0.0, 1e-7);
}

TEST(ContinuousState, GoalAboveOrigin) {
  const Eigen::Vector3d origin(0, 0, 600);
  const GoalPose goal{origin + Eigen::Vector3d(0, 0, 100), Eigen::Vector3d::UnitZ()};
  const ContinuousState cs = continuous_state(goal, Pose::translation(origin), origin);
  EXPECT_DOUBLE_EQ(cs.goal_distance, 100.0);
  EXPECT_EQ(cs.goal_elevation, 0.0);
  EXPECT_EQ(cs.goal_dir_elevation, 0.0);
  EXPECT_DOUBLE_EQ(cs.tip_distance, 100.0);
  EXPECT_NEAR(cs.tip_elevation, kPi, 1e-15);
}

TEST(ContinuousState, MatchesScratchImplementation) {
  const ArmParams params;
  const Eigen::Vector3d origin = arm_forward_kinematics(PressureVector{}, params).position();
  std::mt19937_64 rng(99);
  for (int i = 0; i < 2000; ++i) {
    const Pose gp = arm_forward_kinematics(random_pressures(rng), params);
    const Pose tp = arm_forward_kinematics(random_pressures(rng), params);
    const GoalPose goal = GoalPose::from_pose(gp);
    const auto got = continuous_state(goal, tp, origin).as_array();
    const auto want = oracle::scratch_state(v3(goal.position), v3(goal.direction), v3(tp.position()),
                                            v3(pose_to_direction(tp)), v3(origin));
    for (std::size_t d : {0u, 5u}) EXPECT_NEAR(got[d], want[d], 1e-9) << "dim " << d;
    for (std::size_t d : {1u, 3u, 6u, 8u}) EXPECT_LT(angle_gap(got[d], want[d]), 1e-9) << "dim " << d;
    for (std::size_t d : {2u, 4u, 7u, 9u}) EXPECT_NEAR(got[d], want[d], 1e-9) << "dim " << d;
  }
}

TEST(ContinuousState, FrameFallsBackNearWorldX) {
  const Eigen::Matrix3d f = frame_about(Eigen::Vector3d(1, 0, 0.01).normalized());
  EXPECT_LT((f.transpose() * f - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(f.determinant(), 1.0, 1e-12);
  EXPECT_NEAR(f.col(0).y(), 1.0, 1e-3);
}

TEST(Encode, TipDistanceBins) {
  const BinningSpec spec = BinningSpec::make();
  ContinuousState cs;
  cs.tip_distance = 0.0;
  EXPECT_EQ(encode(cs, spec)[5], 0);
  cs.tip_distance = 45.0;
  EXPECT_EQ(encode(cs, spec)[5], 2);
  cs.tip_distance = 1e6;
  EXPECT_EQ(encode(cs, spec)[5], 3);
}

TEST(Encode, MinimumIsIndexZero) {
  ContinuousState cs;
  cs.goal_azimuth = -kPi;
  cs.goal_dir_azimuth = -kPi;
  cs.tip_azimuth = -kPi;
  cs.tip_dir_azimuth = -kPi;
  EXPECT_EQ(encode(cs, BinningSpec::make()).index(), 0u);
}

TEST(Encode, GoalDistanceBeyondMaxClampsToLastBin) {
  ContinuousState cs;
  cs.goal_distance = 5000.0;
  EXPECT_EQ(encode(cs, BinningSpec::make())[0], 3);
}

TEST(Encode, ValueOnEdgeBelongsToUpperBin) {
  const BinningSpec spec = BinningSpec::make();
  for (std::size_t d = 0; d < kStateDims; ++d) {
    const BinEdges& e = spec.edges[d];
    for (std::uint32_t i = 1; i < kBinsPerDim; ++i) {
      EXPECT_EQ(spec.bin_of(d, e[i]), i) << "dim " << d << " edge " << i;
      EXPECT_EQ(spec.bin_of(d, std::nextafter(e[i], -1e300)), i - 1) << "dim " << d << " edge " << i;
    }
    EXPECT_EQ(spec.bin_of(d, e[0]), 0u);
    if (std::isfinite(e[4])) {
      EXPECT_EQ(spec.bin_of(d, e[4]), 3u) << "last bin is closed, dim " << d;
    }
  }
}

TEST(Encode, GoalDirectionElevationUsesFineEdges) {
  const BinningSpec spec = BinningSpec::make();
  const double deg = kPi / 180.0;
  EXPECT_EQ(spec.bin_of(4, 4.9 * deg), 0u);
  EXPECT_EQ(spec.bin_of(4, 10 * deg), 1u);
  EXPECT_EQ(spec.bin_of(4, 45 * deg), 2u);
  EXPECT_EQ(spec.bin_of(4, 170 * deg), 3u);
}

TEST(Encode, TipDistanceBinMonotone) {
  const BinningSpec spec = BinningSpec::make();
  std::uint32_t prev = 0;
  for (double d = 0.0; d < 200.0; d += 0.25) {
    const std::uint32_t b = spec.bin_of(5, d);
    EXPECT_GE(b, prev);
    prev = b;
  }
}

TEST(Binning, RejectsNonIncreasingEdges) {
  EXPECT_THROW(BinningSpec::make(400.0, {5.0, 5.0, 60.0}), ConfigError);
  EXPECT_THROW(BinningSpec::make(-1.0), ConfigError);
}

TEST(GoalBin, Examples) {
  EXPECT_EQ(goal_bin(StateIndex{0}), 0u);
  EXPECT_EQ(goal_bin(DiscreteState({1, 0, 0, 0, 0, 0, 0, 0, 0, 0})), 256u);
  for (StateIndex suffix = 0; suffix < kTipSuffixCount; suffix += 37) {
    DiscreteState::Bins bins{3, 3, 3, 3, 3};
    const DiscreteState tail = DiscreteState::unpack(suffix);
    for (std::size_t i = 5; i < kStateDims; ++i) bins[i] = tail[i];
    EXPECT_EQ(goal_bin(DiscreteState(bins)), 1023u);
  }
}

TEST(GoalBin, InvariantUnderTipDims) {
  const ArmParams params;
  const BinningSpec spec = BinningSpec::make();
  const Eigen::Vector3d origin = arm_forward_kinematics(PressureVector{}, params).position();
  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    const GoalPose goal = GoalPose::from_pose(arm_forward_kinematics(random_pressures(rng), params));
    const GoalBin expected = goal_bin_of(goal, origin, spec);
    for (int j = 0; j < 5; ++j) {
      const Pose tip = arm_forward_kinematics(random_pressures(rng), params);
      EXPECT_EQ(goal_bin(encode(continuous_state(goal, tip, origin), spec)), expected);
    }
  }
}

TEST(DiscreteState, PackUnpackExhaustive) {
  std::vector<bool> seen(kStateCount, false);
  for (StateIndex i = 0; i < kStateCount; ++i) {
    const DiscreteState s = DiscreteState::unpack(i);
    StateIndex packed = 0;
    for (std::size_t d = 0; d < kStateDims; ++d) packed += s[d] * (1u << (2 * (kStateDims - 1 - d)));
    ASSERT_EQ(packed, i);
    ASSERT_EQ(s.index(), i);
    ASSERT_EQ(goal_bin(i) * kTipSuffixCount + tip_suffix(i), i);
    seen[i] = true;
  }
  EXPECT_EQ(std::count(seen.begin(), seen.end(), true), static_cast<long>(kStateCount));
}

TEST(DiscreteState, RejectsOutOfRange) {
  EXPECT_THROW(DiscreteState::unpack(kStateCount), DomainError);
  EXPECT_THROW(DiscreteState({4, 0, 0, 0, 0, 0, 0, 0, 0, 0}), DomainError);
}

TEST(Encode, TotalOnRandomStates) {
  const BinningSpec spec = BinningSpec::make();
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-10.0, 1000.0);
  for (int i = 0; i < 10000; ++i) {
    ContinuousState cs;
    cs.goal_distance = std::abs(u(rng));
    cs.goal_azimuth = wrap_azimuth(std::fmod(u(rng), kPi));
    cs.tip_distance = std::abs(u(rng));
    cs.tip_elevation = std::fmod(std::abs(u(rng)), kPi);
    const DiscreteState s = encode(cs, spec);
    EXPECT_LT(s.index(), kStateCount);
    EXPECT_EQ(DiscreteState::unpack(s.index()), s);
  }
}

}  // namespace
}  // namespace hpnq
