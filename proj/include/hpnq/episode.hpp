#pragma once

// Point-to-point control episodes against a pluggable plant.

#include <cmath>
#include <memory>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "hpnq/csv.hpp"
#include "hpnq/errors.hpp"
#include "hpnq/kinematics.hpp"
#include "hpnq/qtable.hpp"
#include "hpnq/random.hpp"
#include "hpnq/state_codec.hpp"

namespace hpnq {

// Seconds of physical time represented by one quasi-static step; only used to
// label CSV time axes.
inline constexpr double kSecondsPerStep = 2.0;

struct TrackingError {
  double position = 0.0;  // mm
  double rotation = 0.0;  // deg, angle between tip and goal directions
};

inline TrackingError tracking_error(const Pose& tip, const GoalPose& goal) {
  const double c = std::clamp(pose_to_direction(tip).dot(goal.direction), -1.0, 1.0);
  return {(tip.position() - goal.position).norm(), std::acos(c) * 180.0 / std::numbers::pi};
}

struct RewardSpec {
  double w_pos = 1.0;        // per mm of positional progress
  double w_rot = 0.5;        // per degree of orientation progress
  double goal_bonus = 100.0;
  double step_penalty = 0.1;
  double success_pos = 5.0;  // mm
  double success_rot = 5.0;  // deg

  bool success(const TrackingError& e) const { return e.position < success_pos && e.rotation < success_rot; }

  void validate() const {
    for (double v : {w_pos, w_rot, goal_bonus, step_penalty, success_pos, success_rot}) {
      if (!std::isfinite(v) || v < 0.0) throw DomainError("reward: all weights and thresholds must be >= 0");
    }
  }
};

inline double compute_reward(const TrackingError& prev, const TrackingError& cur, const RewardSpec& spec) {
  double r = spec.w_pos * (prev.position - cur.position) + spec.w_rot * (prev.rotation - cur.rotation) -
             spec.step_penalty;
  if (spec.success(cur)) r += spec.goal_bonus;
  return r;
}

class Plant {
 public:
  virtual ~Plant() = default;
  // Returns the unactuated tip pose.
  virtual Pose reset() = 0;
  // Commands the pressures and returns the settled, observed tip pose.
  virtual Pose apply(const PressureVector& p) = 0;
  virtual const ArmParams& params() const = 0;
};

class NominalPlant final : public Plant {
 public:
  explicit NominalPlant(const ArmParams& params) : params_(params) { params_.validate(); }

  Pose reset() override { return arm_forward_kinematics(PressureVector{}, params_); }
  Pose apply(const PressureVector& p) override { return arm_forward_kinematics(p, params_); }
  const ArmParams& params() const override { return params_; }

 private:
  ArmParams params_;
};

struct PerturbedPlantConfig {
  std::array<double, 2> a_scale_range{0.8, 1.2};  // curvature gain multiplier, sampled once per plant
  std::array<double, 2> b_scale_range{0.8, 1.2};  // elongation gain multiplier
  double tip_noise_sigma = 5.0;                   // mm, per axis
  double droop_gain = 0.02;                       // mm of sag per mm of horizontal reach

  static PerturbedPlantConfig neutral() { return {{1.0, 1.0}, {1.0, 1.0}, 0.0, 0.0}; }

  void validate() const {
    for (const auto& r : {a_scale_range, b_scale_range}) {
      if (!(r[0] > 0.0) || !(r[1] >= r[0]) || !std::isfinite(r[1]))
        throw DomainError("perturbed plant: scale ranges must satisfy 0 < lo <= hi");
    }
    if (!std::isfinite(tip_noise_sigma) || tip_noise_sigma < 0.0)
      throw DomainError("perturbed plant: tip noise sigma must be >= 0");
    if (!std::isfinite(droop_gain) || droop_gain < 0.0) throw DomainError("perturbed plant: droop gain must be >= 0");
  }
};

// Mis-modeled plant: scaled gains, gravity-like sag proportional to
// horizontal reach, and Gaussian tip-position noise.
class PerturbedPlant final : public Plant {
 public:
  PerturbedPlant(const ArmParams& nominal, const PerturbedPlantConfig& cfg, std::uint64_t seed)
      : nominal_(nominal), cfg_(cfg), rng_(seed) {
    nominal_.validate();
    cfg_.validate();
    std::uniform_real_distribution<double> a(cfg.a_scale_range[0], cfg.a_scale_range[1]);
    std::uniform_real_distribution<double> b(cfg.b_scale_range[0], cfg.b_scale_range[1]);
    a_scale_ = cfg.a_scale_range[0] == cfg.a_scale_range[1] ? cfg.a_scale_range[0] : a(rng_);
    b_scale_ = cfg.b_scale_range[0] == cfg.b_scale_range[1] ? cfg.b_scale_range[0] : b(rng_);
    actual_ = nominal_;
    actual_.curvature_gain *= a_scale_;
    actual_.elongation_gain *= b_scale_;
  }

  Pose reset() override { return settle(PressureVector{}); }

  Pose apply(const PressureVector& p) override {
    Pose pose = settle(p);
    if (cfg_.tip_noise_sigma > 0.0) {
      std::normal_distribution<double> noise(0.0, cfg_.tip_noise_sigma);
      Eigen::Matrix4d m = pose.matrix();
      for (int i = 0; i < 3; ++i) m(i, 3) += noise(rng_);
      pose = Pose(m);
    }
    return pose;
  }

  // Commands are validated against the nominal pressure limit.
  const ArmParams& params() const override { return nominal_; }
  double a_scale() const { return a_scale_; }
  double b_scale() const { return b_scale_; }

 private:
  Pose settle(const PressureVector& p) const {
    p.check_range(nominal_.max_pressure);
    Eigen::Matrix4d m = arm_forward_kinematics(p, actual_).matrix();
    m(2, 3) -= cfg_.droop_gain * std::hypot(m(0, 3), m(1, 3));
    return Pose(m);
  }

  ArmParams nominal_;
  ArmParams actual_;
  PerturbedPlantConfig cfg_;
  Rng rng_;
  double a_scale_ = 1.0;
  double b_scale_ = 1.0;
};

inline std::unique_ptr<Plant> make_perturbed_plant(const ArmParams& params, const PerturbedPlantConfig& cfg,
                                                   std::uint64_t seed) {
  return std::make_unique<PerturbedPlant>(params, cfg, seed);
}

struct EpisodeSettings {
  HyperParams hp;
  RewardSpec reward;
  ActionSpec actions;
  BinningSpec binning = BinningSpec::make();
  int max_steps = 200;
  double initial_pressure = -1.0;  // kPa; negative means max_pressure / 2

  void validate() const {
    hp.validate();
    reward.validate();
    actions.validate();
    binning.validate();
    if (max_steps < 0) throw DomainError("episode: max_steps must be >= 0");
  }
};

inline constexpr int kNoAction = -1;

// Record 0 is the observation after the initial pressurization; record t >= 1
// holds the action taken at t-1, its reward and the resulting observation.
struct StepRecord {
  int step = 0;
  PressureVector pressures;
  double pos_error = 0.0;  // mm
  double rot_error = 0.0;  // deg
  StateIndex state = 0;
  int action = kNoAction;
  double reward = 0.0;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

enum class Outcome { kSuccess, kStepLimit };

struct EpisodeLog {
  std::vector<StepRecord> records;
  Outcome outcome = Outcome::kStepLimit;

  // Number of actions taken.
  std::size_t steps() const { return records.empty() ? 0 : records.size() - 1; }
  const StepRecord& first() const { return records.front(); }
  const StepRecord& last() const { return records.back(); }

  double total_reward() const {
    double sum = 0.0;
    for (const auto& r : records) sum += r.reward;
    return sum;
  }

  friend bool operator==(const EpisodeLog&, const EpisodeLog&) = default;
};

inline void write_csv(std::ostream& os, const EpisodeLog& log) {
  os << "step,time_s,pos_error_mm,rot_error_deg,state_index,action_id,reward\n";
  for (const auto& r : log.records) {
    os << std::to_string(r.step) << ',' << format_fixed(r.step * kSecondsPerStep, 1) << ',' << format_fixed(r.pos_error) << ','
       << format_fixed(r.rot_error) << ',' << std::to_string(r.state) << ',' << std::to_string(r.action) << ',' << format_fixed(r.reward) << '\n';
  }
}

namespace detail {

template <bool Training, class Table>
EpisodeLog run_episode_impl(Plant& plant, const GoalPose& goal, Table& q, const EpisodeSettings& settings, Rng* rng) {
  settings.validate();
  const ArmParams& params = plant.params();
  const Eigen::Vector3d origin = plant.reset().position();
  const double p0 = settings.initial_pressure < 0.0 ? params.max_pressure / 2.0 : settings.initial_pressure;

  auto observe = [&](const Pose& tip) {
    return std::pair{tracking_error(tip, goal), encode(continuous_state(goal, tip, origin), settings.binning).index()};
  };

  PressureVector pressures = PressureVector::uniform(p0);
  auto [err, state] = observe(plant.apply(pressures));

  EpisodeLog log;
  log.records.reserve(static_cast<std::size_t>(settings.max_steps) + 1);
  log.records.push_back({0, pressures, err.position, err.rotation, state, kNoAction, 0.0});
  if (settings.reward.success(err)) {
    log.outcome = Outcome::kSuccess;
    return log;
  }

  for (int t = 1; t <= settings.max_steps; ++t) {
    ActionId a;
    if constexpr (Training) {
      a = select_action(q, state, settings.hp.epsilon, *rng);
    } else {
      a = greedy_action(q, state);
    }
    pressures = settings.actions.apply(pressures, a, params.max_pressure);
    auto [next_err, next_state] = observe(plant.apply(pressures));
    const double r = compute_reward(err, next_err, settings.reward);
    const bool done = settings.reward.success(next_err);
    if constexpr (Training) q_update(q, state, a, r, next_state, settings.hp, done);

    log.records.push_back({t, pressures, next_err.position, next_err.rotation, next_state, a, r});
    err = next_err;
    state = next_state;
    if (done) {
      log.outcome = Outcome::kSuccess;
      break;
    }
  }
  return log;
}

}  // namespace detail

// Observe -> encode -> epsilon-greedy -> apply -> reward -> update, until the
// success thresholds are met or max_steps actions have been taken.
template <class Value>
EpisodeLog run_training_episode(Plant& plant, const GoalPose& goal, BasicQTable<Value>& q,
                                const EpisodeSettings& settings, Rng& rng) {
  return detail::run_episode_impl<true>(plant, goal, q, settings, &rng);
}

// Greedy (epsilon = 0) and read-only.
template <class Value>
EpisodeLog run_evaluation_episode(Plant& plant, const GoalPose& goal, const BasicQTable<Value>& q,
                                  const EpisodeSettings& settings) {
  return detail::run_episode_impl<false>(plant, goal, q, settings, nullptr);
}

}  // namespace hpnq
