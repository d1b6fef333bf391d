#pragma once

// Implementations of the hpnq command-line subcommands. Each returns a
// process exit code: 0 ok, 1 runtime failure, 2 usage or configuration error.

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hpnq/config.hpp"
#include "hpnq/csv.hpp"
#include "hpnq/errors.hpp"
#include "hpnq/eval.hpp"
#include "hpnq/kinematics.hpp"
#include "hpnq/pretrain.hpp"
#include "hpnq/qtable.hpp"
#include "hpnq/qtable_io.hpp"

namespace hpnq::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> out;
  bool paper_scale = false;
};

namespace detail {

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

inline RunConfig config_or_default(const std::optional<std::filesystem::path>& path) {
  return path ? load_config(*path) : RunConfig{};
}

inline std::string vec3(const Eigen::Vector3d& v) {
  return format_fixed(v.x()) + ' ' + format_fixed(v.y()) + ' ' + format_fixed(v.z());
}

}  // namespace detail

inline int cmd_fk(const std::vector<double>& pressures, const std::optional<std::filesystem::path>& config,
                  std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    if (pressures.size() != kPressureCount) {
      err << "fk: expected " << kPressureCount << " pressures, got " << pressures.size() << '\n';
      return kExitUsage;
    }
    const RunConfig cfg = detail::config_or_default(config);
    std::array<double, kPressureCount> p;
    std::copy(pressures.begin(), pressures.end(), p.begin());
    Pose pose;
    try {
      pose = arm_forward_kinematics(PressureVector(p), cfg.arm);
    } catch (const DomainError& e) {
      err << "fk: " << e.what() << '\n';
      return kExitUsage;
    }
    out << "position_mm: " << detail::vec3(pose.position()) << '\n';
    out << "direction: " << detail::vec3(pose_to_direction(pose)) << '\n';
    return kExitOk;
  });
}

inline GoalBank goal_bank_for(const RunConfig& cfg, const PretrainOptions& opt, std::ostream& out) {
  const BinningSpec& binning = opt.episode.binning;
  Rng rng = make_rng(opt.seed, 0xB4A7);
  if (cfg.pretrain.goal_bank_cache.empty()) return build_goal_bank(opt.arm, binning, opt.quota, opt.sample_budget, rng);

  const std::filesystem::path cache = cfg.pretrain.goal_bank_cache;
  const auto fp = goal_bank_fingerprint(opt.arm, binning, opt.quota, opt.sample_budget, opt.seed);
  if (std::filesystem::exists(cache)) {
    if (auto bank = load_goal_bank(cache, fp)) {
      out << "goal_bank_cache: hit " << cache.string() << '\n';
      return *bank;
    }
  }
  GoalBank bank = build_goal_bank(opt.arm, binning, opt.quota, opt.sample_budget, rng);
  save_goal_bank(bank, fp, cache);
  out << "goal_bank_cache: wrote " << cache.string() << '\n';
  return bank;
}

inline int cmd_pretrain(const std::filesystem::path& config, const Overrides& ov, std::ostream& out,
                        std::ostream& err) {
  return detail::guarded(err, [&] {
    RunConfig cfg = load_config(config);
    if (ov.seed) cfg.pretrain.seed = *ov.seed;
    if (ov.workers) cfg.pretrain.workers = *ov.workers;
    if (ov.out) cfg.pretrain.output = *ov.out;
    if (ov.paper_scale) cfg.pretrain.paper_scale = true;
    cfg.validate();

    const PretrainOptions opt = cfg.pretrain_options();
    const GoalBank bank = goal_bank_for(cfg, opt, out);
    const PretrainResult result = pretrain(opt, bank);
    save(result.table, cfg.pretrain.output);

    const auto& s = result.summary;
    nlohmann::ordered_json summary = {
        {"qtable", cfg.pretrain.output},
        {"seed", cfg.pretrain.seed},
        {"workers", cfg.pretrain.workers},
        {"quota_per_bin", cfg.pretrain.quota_per_bin},
        {"reachable_bins", s.reachable_bins},
        {"goals_run", s.goals},
        {"episodes", s.episodes},
        {"fk_samples", s.samples_used},
        {"trained_entries", s.trained_entries},
        {"augmented_entries", s.augmented_entries},
        {"wall_time_s", s.wall_seconds},
    };
    std::ofstream(cfg.pretrain.output + ".summary.json") << summary.dump(2) << '\n';
    for (const auto& [k, v] : summary.items()) out << k << ": " << v.dump() << '\n';
    return kExitOk;
  });
}

inline int cmd_augment(const std::filesystem::path& in, const std::filesystem::path& out_path, int radius,
                       std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    if (radius < 1) {
      err << "augment: radius must be >= 1\n";
      return kExitUsage;
    }
    const QTable q = load(in);
    const auto result = augment(q, radius);
    save(result.table, out_path);
    out << "filled: " << result.filled << '\n';
    out << "refreshed: " << result.refreshed << '\n';
    out << "trained_entries: " << result.table.trained_count() << '\n';
    out << "augmented_entries: " << result.table.augmented_count() << '\n';
    return kExitOk;
  });
}

inline int cmd_eval(const std::filesystem::path& config, const std::optional<std::filesystem::path>& qtable,
                    bool zero_init, PlantKind plant, const Overrides& ov, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    if (qtable.has_value() == zero_init) {
      err << "eval: give exactly one of a Q-table path or --zero-init\n";
      return kExitUsage;
    }
    RunConfig cfg = load_config(config);
    if (ov.seed) cfg.eval.seed = *ov.seed;
    if (ov.out) cfg.eval.output_dir = *ov.out;

    std::optional<QTable> table;
    if (qtable) table = load(*qtable);
    const auto goals = cfg.eval_goals();
    const EvalReport report = evaluate(cfg, goals, table ? &*table : nullptr, plant);
    write_report(report, cfg.eval.output_dir);

    out << "goals: " << goals.size() << '\n';
    for (Method m : {Method::kPretrained, Method::kZeroInit}) {
      if (!report.has(m)) continue;
      out << method_name(m) << ".median_final_pos_error_mm: " << format_fixed(report.median_final_pos(m), 3) << '\n';
      out << method_name(m) << ".goals_reaching_" << format_fixed(report.reach_threshold, 0)
          << "mm: " << report.reached_count(m) << '\n';
    }
    out << "output_dir: " << cfg.eval.output_dir << '\n';
    return kExitOk;
  });
}

inline int cmd_inspect(const std::filesystem::path& qtable, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const QTable q = load(qtable);
    std::size_t entries = 0;
    double lo = 0.0;
    double hi = 0.0;
    q.for_each_entry([&](StateIndex, ActionId, float v, std::uint16_t) {
      lo = entries == 0 ? v : std::min<double>(lo, v);
      hi = entries == 0 ? v : std::max<double>(hi, v);
      ++entries;
    });
    out << "action_count: " << q.action_count() << '\n';
    out << "states: " << q.row_count() << '\n';
    out << "goal_bins: " << touched_goal_bins(q).size() << '\n';
    out << "entries: " << entries << '\n';
    out << "trained_entries: " << q.trained_count() << '\n';
    out << "augmented_entries: " << q.augmented_count() << '\n';
    out << "value_min: " << format_fixed(lo) << '\n';
    out << "value_max: " << format_fixed(hi) << '\n';
    return kExitOk;
  });
}

}  // namespace hpnq::cli
