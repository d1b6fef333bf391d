#pragma once

// Point-to-point evaluation: every goal is attempted `repetitions` times by
// each method (pre-trained table, zero-initialized table) with a frozen
// greedy policy. Error series are held at their last value after an episode
// ends so every series has max_steps + 1 samples.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "hpnq/config.hpp"
#include "hpnq/csv.hpp"
#include "hpnq/episode.hpp"
#include "hpnq/qtable.hpp"
#include "hpnq/random.hpp"

namespace hpnq {

enum class Method { kPretrained, kZeroInit };
enum class PlantKind { kNominal, kPerturbed };

inline const char* method_name(Method m) { return m == Method::kPretrained ? "pretrained" : "zero_init"; }

struct ErrorSeries {
  std::vector<double> pos;  // mm
  std::vector<double> rot;  // deg
};

inline ErrorSeries padded_series(const EpisodeLog& log, int max_steps) {
  ErrorSeries s;
  for (int t = 0; t <= max_steps; ++t) {
    const auto& r = log.records[std::min<std::size_t>(static_cast<std::size_t>(t), log.records.size() - 1)];
    s.pos.push_back(r.pos_error);
    s.rot.push_back(r.rot_error);
  }
  return s;
}

struct GoalResult {
  std::size_t goal_index = 0;
  Method method = Method::kZeroInit;
  std::vector<EpisodeLog> repetitions;
  ErrorSeries mean;  // pointwise mean over repetitions

  double final_pos() const { return mean.pos.back(); }
  double final_rot() const { return mean.rot.back(); }
  double min_pos() const { return *std::min_element(mean.pos.begin(), mean.pos.end()); }

  // First step at which the mean positional error is below `threshold`.
  std::optional<int> steps_to(double threshold) const {
    for (std::size_t t = 0; t < mean.pos.size(); ++t)
      if (mean.pos[t] < threshold) return static_cast<int>(t);
    return std::nullopt;
  }
};

struct EvalReport {
  int max_steps = 0;
  double reach_threshold = 30.0;
  std::vector<GoalPose> goals;
  std::vector<GoalResult> results;

  std::vector<const GoalResult*> of(Method m) const {
    std::vector<const GoalResult*> out;
    for (const auto& r : results)
      if (r.method == m) out.push_back(&r);
    return out;
  }

  bool has(Method m) const { return !of(m).empty(); }

  std::size_t reached_count(Method m) const {
    std::size_t n = 0;
    for (const auto* r : of(m)) n += r->min_pos() < reach_threshold;
    return n;
  }

  double median_final_pos(Method m) const {
    std::vector<double> v;
    for (const auto* r : of(m)) v.push_back(r->final_pos());
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  }

  // Mean over goals of the per-goal mean series.
  ErrorSeries aggregate(Method m) const {
    ErrorSeries s{std::vector<double>(max_steps + 1, 0.0), std::vector<double>(max_steps + 1, 0.0)};
    const auto rs = of(m);
    for (const auto* r : rs) {
      for (int t = 0; t <= max_steps; ++t) {
        s.pos[t] += r->mean.pos[t] / rs.size();
        s.rot[t] += r->mean.rot[t] / rs.size();
      }
    }
    return s;
  }
};

inline std::unique_ptr<Plant> make_plant(PlantKind kind, const RunConfig& cfg, std::uint64_t seed) {
  if (kind == PlantKind::kNominal) return std::make_unique<NominalPlant>(cfg.arm);
  return make_perturbed_plant(cfg.arm, cfg.perturbed_plant, seed);
}

// Runs both methods when `pretrained` is given, otherwise only the
// zero-initialized baseline. Both methods see the same plant instance seeds.
inline EvalReport evaluate(const RunConfig& cfg, const std::vector<GoalPose>& goals, const QTable* pretrained,
                           PlantKind plant_kind) {
  EvalReport report;
  report.max_steps = cfg.max_steps;
  report.reach_threshold = cfg.eval.reach_threshold_mm;
  report.goals = goals;
  const EpisodeSettings settings = cfg.episode_settings();
  const QTable zero;

  std::vector<Method> methods;
  if (pretrained) methods.push_back(Method::kPretrained);
  methods.push_back(Method::kZeroInit);

  for (Method m : methods) {
    const QTable& table = m == Method::kPretrained ? *pretrained : zero;
    for (std::size_t g = 0; g < goals.size(); ++g) {
      GoalResult res;
      res.goal_index = g;
      res.method = m;
      res.mean = {std::vector<double>(cfg.max_steps + 1, 0.0), std::vector<double>(cfg.max_steps + 1, 0.0)};
      for (std::uint32_t rep = 0; rep < cfg.eval.repetitions; ++rep) {
        auto plant = make_plant(plant_kind, cfg, derive_seed(cfg.eval.seed, g * 1000 + rep));
        res.repetitions.push_back(run_evaluation_episode(*plant, goals[g], table, settings));
        const ErrorSeries s = padded_series(res.repetitions.back(), cfg.max_steps);
        for (int t = 0; t <= cfg.max_steps; ++t) {
          res.mean.pos[t] += s.pos[t] / cfg.eval.repetitions;
          res.mean.rot[t] += s.rot[t] / cfg.eval.repetitions;
        }
      }
      report.results.push_back(std::move(res));
    }
  }
  return report;
}

inline void write_series_csv(std::ostream& os, const ErrorSeries& s) {
  os << "step,time_s,pos_error_mm,rot_error_deg\n";
  for (std::size_t t = 0; t < s.pos.size(); ++t) {
    os << std::to_string(t) << ',' << format_fixed(t * kSecondsPerStep, 1) << ',' << format_fixed(s.pos[t]) << ','
       << format_fixed(s.rot[t]) << '\n';
  }
}

// Writes, under `dir`:
//   goal_<i>_<method>.csv          repetition-averaged series
//   goal_<i>_<method>_rep<r>.csv   raw episode logs
//   aggregate.csv                  goal-averaged series, one column pair per method
//   summary.csv                    per goal and method: final/min errors, time to threshold
inline void write_report(const EvalReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream f(dir / name, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    return f;
  };
  for (const auto& r : report.results) {
    const std::string stem = "goal_" + std::to_string(r.goal_index) + "_" + method_name(r.method);
    auto f = open(stem + ".csv");
    write_series_csv(f, r.mean);
    for (std::size_t k = 0; k < r.repetitions.size(); ++k) {
      auto rf = open(stem + "_rep" + std::to_string(k) + ".csv");
      write_csv(rf, r.repetitions[k]);
    }
  }

  const std::vector<Method> methods = report.has(Method::kPretrained)
                                          ? std::vector<Method>{Method::kPretrained, Method::kZeroInit}
                                          : std::vector<Method>{Method::kZeroInit};
  {
    auto f = open("aggregate.csv");
    f << "step,time_s";
    for (Method m : methods) f << ',' << method_name(m) << "_pos_error_mm," << method_name(m) << "_rot_error_deg";
    f << '\n';
    std::vector<ErrorSeries> agg;
    for (Method m : methods) agg.push_back(report.aggregate(m));
    for (int t = 0; t <= report.max_steps; ++t) {
      f << std::to_string(t) << ',' << format_fixed(t * kSecondsPerStep, 1);
      for (const auto& s : agg) f << ',' << format_fixed(s.pos[t]) << ',' << format_fixed(s.rot[t]);
      f << '\n';
    }
  }
  {
    auto f = open("summary.csv");
    f << "goal,method,final_pos_error_mm,final_rot_error_deg,min_pos_error_mm,time_to_threshold_s\n";
    for (const auto& r : report.results) {
      const auto steps = r.steps_to(report.reach_threshold);
      f << std::to_string(r.goal_index) << ',' << method_name(r.method) << ',' << format_fixed(r.final_pos()) << ','
        << format_fixed(r.final_rot()) << ',' << format_fixed(r.min_pos()) << ','
        << (steps ? format_fixed(*steps * kSecondsPerStep, 1) : std::string()) << '\n';
    }
  }
}

}  // namespace hpnq
