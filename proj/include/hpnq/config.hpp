#pragma once

// Run configuration: one JSON document, every field optional, unknown fields
// rejected. Field names carry their units.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hpnq/episode.hpp"
#include "hpnq/errors.hpp"
#include "hpnq/kinematics.hpp"
#include "hpnq/pretrain.hpp"
#include "hpnq/qtable.hpp"
#include "hpnq/state_codec.hpp"

namespace hpnq {

// Quotas above this need pretrain.paper_scale = true (3000/bin is the
// full-size run).
inline constexpr std::uint32_t kDeskScaleQuotaLimit = 100;

struct BinningSettings {
  double d_max_mm = 400.0;
  std::array<double, 3> d_tip_edges_mm{5.0, 30.0, 60.0};
  std::array<double, 3> goal_dir_elevation_edges_deg{5.0, 20.0, 60.0};

  BinningSpec spec() const {
    constexpr double deg = std::numbers::pi / 180.0;
    return BinningSpec::make(d_max_mm, d_tip_edges_mm,
                             {goal_dir_elevation_edges_deg[0] * deg, goal_dir_elevation_edges_deg[1] * deg,
                              goal_dir_elevation_edges_deg[2] * deg});
  }
};

struct PretrainSettings {
  std::uint32_t quota_per_bin = 10;
  std::uint64_t sample_budget = 1'000'000;
  std::size_t workers = 1;
  std::uint64_t seed = 1;
  std::uint32_t episodes_per_goal = 1;
  bool paper_scale = false;
  std::string goal_bank_cache;  // empty: no cache
  std::string output = "qtable.hpnq";
};

// A goal is given either as a pose or as the pressures that produce it on
// the nominal arm.
struct GoalSpec {
  std::optional<PressureVector> pressures;
  GoalPose pose;
};

struct EvalSettings {
  std::vector<GoalSpec> goals;  // empty: default four-goal suite (or random goals)
  std::uint32_t random_goal_count = 0;
  std::uint64_t goal_seed = 777;
  std::uint32_t repetitions = 3;
  std::uint64_t seed = 1;  // perturbed-plant stream
  double reach_threshold_mm = 30.0;
  std::string output_dir = "eval_out";
};

// Two elongation-dominant and two bending-dominant goals.
inline std::vector<GoalSpec> default_goal_suite() {
  auto with = [](std::initializer_list<std::tuple<std::size_t, std::size_t, double>> overrides, double base) {
    PressureVector p = PressureVector::uniform(base);
    for (auto [s, c, v] : overrides) p(s, c) = v;
    return p;
  };
  std::vector<GoalSpec> goals;
  goals.push_back({PressureVector::uniform(50.0), {}});
  goals.push_back({with({{3, 0, 20.0}, {3, 2, 10.0}}, 12.0), {}});
  goals.push_back({with({{0, 0, 60.0}, {0, 2, 0.0}, {1, 0, 50.0}, {1, 2, 10.0}}, 30.0), {}});
  goals.push_back({with({{1, 1, 55.0}, {1, 3, 5.0}, {2, 1, 50.0}, {2, 3, 10.0}}, 30.0), {}});
  return goals;
}

struct RunConfig {
  ArmParams arm;
  BinningSettings binning;
  HyperParams learning{0.1, 0.6, 0.1};
  int augment_radius = 1;
  ActionSpec actions;
  RewardSpec reward;
  int max_steps = 200;
  PerturbedPlantConfig perturbed_plant;
  PretrainSettings pretrain;
  EvalSettings eval;

  EpisodeSettings episode_settings() const {
    EpisodeSettings e;
    e.hp = learning;
    e.reward = reward;
    e.actions = actions;
    e.binning = binning.spec();
    e.max_steps = max_steps;
    return e;
  }

  PretrainOptions pretrain_options() const {
    PretrainOptions o;
    o.arm = arm;
    o.episode = episode_settings();
    o.quota = pretrain.quota_per_bin;
    o.sample_budget = pretrain.sample_budget;
    o.workers = pretrain.workers;
    o.seed = pretrain.seed;
    o.episodes_per_goal = pretrain.episodes_per_goal;
    o.augment_radius = augment_radius;
    return o;
  }

  // Resolves the configured evaluation goals against the nominal arm.
  std::vector<GoalPose> eval_goals() const {
    std::vector<GoalPose> out;
    if (eval.random_goal_count > 0 && eval.goals.empty()) {
      Rng rng = make_rng(eval.goal_seed, 0);
      for (std::uint32_t i = 0; i < eval.random_goal_count; ++i)
        out.push_back(GoalPose::from_pose(arm_forward_kinematics(random_pressures(arm, rng), arm)));
      return out;
    }
    for (const GoalSpec& g : eval.goals.empty() ? default_goal_suite() : eval.goals) {
      out.push_back(g.pressures ? GoalPose::from_pose(arm_forward_kinematics(*g.pressures, arm)) : g.pose);
    }
    return out;
  }

  // Throws ConfigError on any violated invariant.
  void validate() const {
    try {
      arm.validate();
      learning.validate();
      actions.validate();
      reward.validate();
      perturbed_plant.validate();
      binning.spec();
      if (binning.d_max_mm <= 0.0) throw ConfigError("binning: d_max_mm must be > 0");
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
    if (augment_radius < 1 || augment_radius > 3) throw ConfigError("learning: augment_radius must be in [1, 3]");
    if (max_steps < 1) throw ConfigError("episode: max_steps must be >= 1");
    if (pretrain.quota_per_bin < 1) throw ConfigError("pretrain: quota_per_bin must be >= 1");
    if (pretrain.quota_per_bin > kDeskScaleQuotaLimit && !pretrain.paper_scale) {
      throw ConfigError("pretrain: quota_per_bin " + std::to_string(pretrain.quota_per_bin) + " exceeds " +
                        std::to_string(kDeskScaleQuotaLimit) + "; set pretrain.paper_scale to run at that scale");
    }
    if (pretrain.sample_budget < 1) throw ConfigError("pretrain: sample_budget must be >= 1");
    if (pretrain.workers < 1) throw ConfigError("pretrain: workers must be >= 1");
    if (pretrain.episodes_per_goal < 1) throw ConfigError("pretrain: episodes_per_goal must be >= 1");
    if (eval.repetitions < 1) throw ConfigError("eval: repetitions must be >= 1");
    if (!(eval.reach_threshold_mm > 0.0)) throw ConfigError("eval: reach_threshold_mm must be > 0");
    for (const GoalSpec& g : eval.goals) {
      if (g.pressures) {
        try {
          g.pressures->check_range(arm.max_pressure);
        } catch (const DomainError& e) {
          throw ConfigError(std::string("eval goal: ") + e.what());
        }
      } else if (std::abs(g.pose.direction.norm() - 1.0) > 1e-6) {
        throw ConfigError("eval goal: direction must be a unit vector");
      }
    }
  }
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> known(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!known.count(key)) throw ConfigError(where + ": unknown field '" + key + "'");
  }
}

template <class T>
void read(const json& obj, const char* key, const std::string& where, T& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (!it->is_number_unsigned()) throw ConfigError(where + "." + key + ": expected a non-negative integer");
    } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!it->is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
    }
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

inline Eigen::Vector3d read_vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(where + ": expected 3 numbers");
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw ConfigError(where + ": expected 3 numbers");
    v[i] = j[i].get<double>();
  }
  return v;
}

inline std::array<double, 2> read_range(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(where + ": expected [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace detail

inline RunConfig config_from_json(const nlohmann::json& j) {
  using detail::read;
  using detail::reject_unknown;
  RunConfig c;
  reject_unknown(j, "config",
                 {"arm", "binning", "learning", "actions", "reward", "episode", "perturbed_plant", "pretrain", "eval"});

  if (auto it = j.find("arm"); it != j.end()) {
    const std::string w = "arm";
    reject_unknown(*it, w,
                   {"rest_length_mm", "curvature_gain_per_mm_kpa", "elongation_gain_mm_per_kpa", "max_pressure_kpa",
                    "straight_eps_per_mm"});
    read(*it, "rest_length_mm", w, c.arm.rest_length);
    read(*it, "curvature_gain_per_mm_kpa", w, c.arm.curvature_gain);
    read(*it, "elongation_gain_mm_per_kpa", w, c.arm.elongation_gain);
    read(*it, "max_pressure_kpa", w, c.arm.max_pressure);
    read(*it, "straight_eps_per_mm", w, c.arm.straight_eps);
  }
  if (auto it = j.find("binning"); it != j.end()) {
    const std::string w = "binning";
    reject_unknown(*it, w, {"d_max_mm", "d_tip_edges_mm", "goal_dir_elevation_edges_deg"});
    read(*it, "d_max_mm", w, c.binning.d_max_mm);
    read(*it, "d_tip_edges_mm", w, c.binning.d_tip_edges_mm);
    read(*it, "goal_dir_elevation_edges_deg", w, c.binning.goal_dir_elevation_edges_deg);
  }
  if (auto it = j.find("learning"); it != j.end()) {
    const std::string w = "learning";
    reject_unknown(*it, w, {"alpha", "gamma", "epsilon", "augment_radius"});
    read(*it, "alpha", w, c.learning.alpha);
    read(*it, "gamma", w, c.learning.gamma);
    read(*it, "epsilon", w, c.learning.epsilon);
    read(*it, "augment_radius", w, c.augment_radius);
  }
  if (auto it = j.find("actions"); it != j.end()) {
    reject_unknown(*it, "actions", {"delta_p_kpa"});
    read(*it, "delta_p_kpa", "actions", c.actions.delta_p);
  }
  if (auto it = j.find("reward"); it != j.end()) {
    const std::string w = "reward";
    reject_unknown(*it, w,
                   {"w_pos_per_mm", "w_rot_per_deg", "goal_bonus", "step_penalty", "success_pos_mm",
                    "success_rot_deg"});
    read(*it, "w_pos_per_mm", w, c.reward.w_pos);
    read(*it, "w_rot_per_deg", w, c.reward.w_rot);
    read(*it, "goal_bonus", w, c.reward.goal_bonus);
    read(*it, "step_penalty", w, c.reward.step_penalty);
    read(*it, "success_pos_mm", w, c.reward.success_pos);
    read(*it, "success_rot_deg", w, c.reward.success_rot);
  }
  if (auto it = j.find("episode"); it != j.end()) {
    reject_unknown(*it, "episode", {"max_steps"});
    read(*it, "max_steps", "episode", c.max_steps);
  }
  if (auto it = j.find("perturbed_plant"); it != j.end()) {
    const std::string w = "perturbed_plant";
    reject_unknown(*it, w, {"a_scale_range", "b_scale_range", "tip_noise_sigma_mm", "droop_gain_mm_per_mm"});
    if (it->contains("a_scale_range")) c.perturbed_plant.a_scale_range = detail::read_range((*it)["a_scale_range"], w);
    if (it->contains("b_scale_range")) c.perturbed_plant.b_scale_range = detail::read_range((*it)["b_scale_range"], w);
    read(*it, "tip_noise_sigma_mm", w, c.perturbed_plant.tip_noise_sigma);
    read(*it, "droop_gain_mm_per_mm", w, c.perturbed_plant.droop_gain);
  }
  if (auto it = j.find("pretrain"); it != j.end()) {
    const std::string w = "pretrain";
    reject_unknown(*it, w,
                   {"quota_per_bin", "sample_budget", "workers", "seed", "episodes_per_goal", "paper_scale",
                    "goal_bank_cache", "output"});
    read(*it, "quota_per_bin", w, c.pretrain.quota_per_bin);
    read(*it, "sample_budget", w, c.pretrain.sample_budget);
    read(*it, "workers", w, c.pretrain.workers);
    read(*it, "seed", w, c.pretrain.seed);
    read(*it, "episodes_per_goal", w, c.pretrain.episodes_per_goal);
    read(*it, "paper_scale", w, c.pretrain.paper_scale);
    read(*it, "goal_bank_cache", w, c.pretrain.goal_bank_cache);
    read(*it, "output", w, c.pretrain.output);
  }
  if (auto it = j.find("eval"); it != j.end()) {
    const std::string w = "eval";
    reject_unknown(*it, w,
                   {"goals", "random_goal_count", "goal_seed", "repetitions", "seed", "reach_threshold_mm",
                    "output_dir"});
    read(*it, "random_goal_count", w, c.eval.random_goal_count);
    read(*it, "goal_seed", w, c.eval.goal_seed);
    read(*it, "repetitions", w, c.eval.repetitions);
    read(*it, "seed", w, c.eval.seed);
    read(*it, "reach_threshold_mm", w, c.eval.reach_threshold_mm);
    read(*it, "output_dir", w, c.eval.output_dir);
    if (auto g = it->find("goals"); g != it->end()) {
      if (!g->is_array()) throw ConfigError("eval.goals: expected an array");
      for (const auto& item : *g) {
        const std::string gw = "eval.goals[]";
        reject_unknown(item, gw, {"pressures_kpa", "position_mm", "direction"});
        GoalSpec spec;
        if (item.contains("pressures_kpa")) {
          const auto& arr = item["pressures_kpa"];
          if (!arr.is_array() || arr.size() != kPressureCount) throw ConfigError(gw + ": expected 16 pressures");
          std::array<double, kPressureCount> p;
          for (std::size_t i = 0; i < kPressureCount; ++i) {
            if (!arr[i].is_number()) throw ConfigError(gw + ": expected 16 pressures");
            p[i] = arr[i].get<double>();
          }
          spec.pressures = PressureVector(p);
        } else if (item.contains("position_mm") && item.contains("direction")) {
          spec.pose.position = detail::read_vec3(item["position_mm"], gw + ".position_mm");
          spec.pose.direction = detail::read_vec3(item["direction"], gw + ".direction");
        } else {
          throw ConfigError(gw + ": give pressures_kpa or position_mm + direction");
        }
        c.eval.goals.push_back(spec);
      }
    }
  }
  c.validate();
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config parse error: " + std::string(e.what()));
  }
  return config_from_json(j);
}

}  // namespace hpnq
