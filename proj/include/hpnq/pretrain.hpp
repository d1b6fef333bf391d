#pragma once

// Simulation pre-training: goal-bin balanced goal sampling, shard-parallel
// Q-learning on the nominal plant, and merging of the per-shard tables.
//
// Every state visited while chasing a goal carries that goal's bin as its
// ten most significant bits, so shards that own disjoint goal bins write
// disjoint parts of the table and can train without coordination.

#include <chrono>
#include <cstring>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "hpnq/episode.hpp"
#include "hpnq/errors.hpp"
#include "hpnq/kinematics.hpp"
#include "hpnq/qtable.hpp"
#include "hpnq/qtable_io.hpp"
#include "hpnq/random.hpp"
#include "hpnq/state_codec.hpp"

namespace hpnq {

inline PressureVector random_pressures(const ArmParams& params, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, params.max_pressure);
  std::array<double, kPressureCount> p;
  for (double& v : p) v = u(rng);
  return PressureVector(p);
}

struct GoalBank {
  std::uint32_t quota = 0;
  std::uint64_t samples_used = 0;
  std::vector<std::vector<GoalPose>> goals = std::vector<std::vector<GoalPose>>(kGoalBinCount);
  std::vector<bool> reachable = std::vector<bool>(kGoalBinCount, false);

  std::vector<GoalBin> reachable_bins() const {
    std::vector<GoalBin> out;
    for (GoalBin b = 0; b < kGoalBinCount; ++b)
      if (reachable[b]) out.push_back(b);
    return out;
  }

  std::size_t goal_count() const {
    std::size_t n = 0;
    for (GoalBin b = 0; b < kGoalBinCount; ++b)
      if (reachable[b]) n += goals[b].size();
    return n;
  }
};

// Rejection-samples goals through forward kinematics until every bin holds
// `quota` goals or `budget` FK evaluations are spent. Bins that did not
// reach quota are marked unreachable and emptied, so reachable bins are
// exactly balanced.
inline GoalBank build_goal_bank(const ArmParams& params, const BinningSpec& binning, std::uint32_t quota,
                                std::uint64_t budget, Rng& rng) {
  if (quota < 1) throw DomainError("goal bank: quota must be >= 1");
  params.validate();
  const Eigen::Vector3d origin = arm_forward_kinematics(PressureVector{}, params).position();

  GoalBank bank;
  bank.quota = quota;
  std::size_t full = 0;
  while (bank.samples_used < budget && full < kGoalBinCount) {
    ++bank.samples_used;
    const GoalPose goal = GoalPose::from_pose(arm_forward_kinematics(random_pressures(params, rng), params));
    auto& bin = bank.goals[goal_bin_of(goal, origin, binning)];
    if (bin.size() < quota) {
      bin.push_back(goal);
      if (bin.size() == quota) ++full;
    }
  }
  for (GoalBin b = 0; b < kGoalBinCount; ++b) {
    bank.reachable[b] = bank.goals[b].size() == quota;
    if (!bank.reachable[b]) bank.goals[b].clear();
  }
  if (full == 0) throw SetupError("goal bank: no goal bin reached its quota within the sampling budget");
  return bank;
}

// Goal-bank cache, same conventions as the Q-table file:
//   "HPNG", version u32 = 1, fingerprint u32, quota u32, samples_used u64,
//   then per bin (1024): reachable u8, count u32, count x 6 f64
//   (position xyz, direction xyz); CRC-32 of everything before it.
// The fingerprint identifies the inputs that produced the bank.
inline constexpr char kGoalBankMagic[4] = {'H', 'P', 'N', 'G'};
inline constexpr std::uint32_t kGoalBankVersion = 1;

inline std::uint32_t goal_bank_fingerprint(const ArmParams& params, const BinningSpec& binning, std::uint32_t quota,
                                           std::uint64_t budget, std::uint64_t seed) {
  detail::ByteWriter w;
  for (double v : {params.curvature_gain, params.elongation_gain, params.rest_length, params.max_pressure,
                   params.straight_eps})
    w.put(v);
  for (const auto& edges : binning.edges)
    for (double e : edges) w.put(e);
  w.put(quota);
  w.put(budget);
  w.put(seed);
  return detail::crc32_of(w.bytes());
}

inline void save_goal_bank(const GoalBank& bank, std::uint32_t fingerprint, const std::filesystem::path& path) {
  detail::ByteWriter w;
  w.put_bytes(kGoalBankMagic, 4);
  w.put(kGoalBankVersion);
  w.put(fingerprint);
  w.put(bank.quota);
  w.put(bank.samples_used);
  for (GoalBin b = 0; b < kGoalBinCount; ++b) {
    w.put(static_cast<std::uint8_t>(bank.reachable[b] ? 1 : 0));
    w.put(static_cast<std::uint32_t>(bank.goals[b].size()));
    for (const GoalPose& g : bank.goals[b]) {
      for (int i = 0; i < 3; ++i) w.put(g.position[i]);
      for (int i = 0; i < 3; ++i) w.put(g.direction[i]);
    }
  }
  detail::append_crc(w);
  detail::write_file(path, w.bytes());
}

// Returns nullopt when the cached bank was produced from different inputs.
inline std::optional<GoalBank> load_goal_bank(const std::filesystem::path& path, std::uint32_t fingerprint) {
  const auto bytes = detail::read_file(path);
  detail::ByteReader r(bytes);
  r.need(4);
  if (std::memcmp(bytes.data(), kGoalBankMagic, 4) != 0)
    throw FormatError(FormatError::Code::kBadMagic, "goal bank: bad magic");
  r.get<std::uint32_t>();
  if (r.get<std::uint32_t>() != kGoalBankVersion)
    throw FormatError(FormatError::Code::kVersionMismatch, "goal bank: unsupported version");
  detail::check_crc(bytes);
  if (r.get<std::uint32_t>() != fingerprint) return std::nullopt;
  GoalBank bank;
  bank.quota = r.get<std::uint32_t>();
  bank.samples_used = r.get<std::uint64_t>();
  for (GoalBin b = 0; b < kGoalBinCount; ++b) {
    bank.reachable[b] = r.get<std::uint8_t>() != 0;
    const auto n = r.get<std::uint32_t>();
    r.need(static_cast<std::size_t>(n) * 6 * sizeof(double));
    bank.goals[b].resize(n);
    for (GoalPose& g : bank.goals[b]) {
      for (int i = 0; i < 3; ++i) g.position[i] = r.get<double>();
      for (int i = 0; i < 3; ++i) g.direction[i] = r.get<double>();
    }
  }
  if (r.remaining() != 4) throw FormatError(FormatError::Code::kTruncated, "goal bank: trailing bytes");
  return bank;
}

struct ShardPlan {
  std::vector<std::vector<GoalBin>> shards;
  // Each goal bin trains on its own stream derive_seed(seed, bin), so the
  // merged result does not depend on the shard count or scheduling.
  std::uint64_t seed = 0;
};

// Round-robin partition of the reachable bins into `workers` shards.
inline ShardPlan make_shard_plan(const GoalBank& bank, std::size_t workers, std::uint64_t seed) {
  if (workers < 1) throw DomainError("shard plan: need at least one worker");
  ShardPlan plan;
  plan.seed = seed;
  plan.shards.resize(workers);
  std::size_t i = 0;
  for (GoalBin b : bank.reachable_bins()) plan.shards[i++ % workers].push_back(b);
  return plan;
}

struct PretrainOptions {
  ArmParams arm;
  EpisodeSettings episode;
  std::uint32_t quota = 10;
  std::uint64_t sample_budget = 1'000'000;
  std::size_t workers = 1;
  std::uint64_t seed = 1;
  std::uint32_t episodes_per_goal = 1;
  int augment_radius = 1;
};

// Trains on every goal of every bin in `bins` against the nominal plant.
inline QTable pretrain_shard(std::span<const GoalBin> bins, std::uint64_t seed, const GoalBank& bank,
                             const PretrainOptions& opt, std::size_t* episodes_run = nullptr) {
  QTable q;
  NominalPlant plant(opt.arm);
  std::size_t episodes = 0;
  for (GoalBin b : bins) {
    Rng rng = make_rng(seed, b);
    for (const GoalPose& goal : bank.goals.at(b)) {
      for (std::uint32_t e = 0; e < opt.episodes_per_goal; ++e) {
        run_training_episode(plant, goal, q, opt.episode, rng);
        ++episodes;
      }
    }
  }
  if (episodes_run) *episodes_run = episodes;
  return q;
}

// Goal bins touched by any stored entry of `q`.
inline std::vector<GoalBin> touched_goal_bins(const QTable& q) {
  std::vector<GoalBin> out;
  for (StateIndex s : q.states()) {
    const GoalBin b = goal_bin(s);
    if (out.empty() || out.back() != b) out.push_back(b);
  }
  return out;
}

// Disjoint union. Throws MergeConflict when two partials touch the same
// goal bin.
inline QTable merge(std::span<const QTable> partials) {
  std::vector<int> owner(kGoalBinCount, -1);
  QTable out;
  for (std::size_t i = 0; i < partials.size(); ++i) {
    const QTable& part = partials[i];
    if (part.action_count() != out.action_count()) throw MergeConflict("merge: action count mismatch");
    for (GoalBin b : touched_goal_bins(part)) {
      if (owner[b] >= 0) {
        throw MergeConflict("merge: goal bin " + std::to_string(b) + " written by partials " +
                            std::to_string(owner[b]) + " and " + std::to_string(i));
      }
      owner[b] = static_cast<int>(i);
    }
    part.for_each_entry([&](StateIndex s, ActionId a, float v, std::uint16_t f) { out.set(s, a, v, f); });
  }
  return out;
}

struct PretrainSummary {
  std::size_t reachable_bins = 0;
  std::size_t goals = 0;
  std::size_t episodes = 0;
  std::size_t trained_entries = 0;
  std::size_t augmented_entries = 0;
  std::uint64_t samples_used = 0;
  double wall_seconds = 0.0;
};

struct PretrainResult {
  QTable table;
  PretrainSummary summary;
};

// Goal bank -> shard plan -> parallel shards -> merge -> augment.
inline PretrainResult pretrain(const PretrainOptions& opt, const GoalBank& bank) {
  const auto start = std::chrono::steady_clock::now();
  opt.arm.validate();
  opt.episode.validate();
  const ShardPlan plan = make_shard_plan(bank, opt.workers, opt.seed);

  std::vector<QTable> partials(plan.shards.size());
  std::vector<std::size_t> episodes(plan.shards.size(), 0);
  std::vector<std::exception_ptr> errors(plan.shards.size());
  auto work = [&](std::size_t i) {
    try {
      partials[i] = pretrain_shard(plan.shards[i], plan.seed, bank, opt, &episodes[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (plan.shards.size() == 1) {
    work(0);
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t i = 0; i < plan.shards.size(); ++i) threads.emplace_back(work, i);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  QTable merged = merge(partials);
  auto augmented = augment(merged, opt.augment_radius);

  PretrainResult result{std::move(augmented.table), {}};
  auto& s = result.summary;
  s.reachable_bins = bank.reachable_bins().size();
  s.goals = bank.goal_count();
  for (auto n : episodes) s.episodes += n;
  s.trained_entries = result.table.trained_count();
  s.augmented_entries = result.table.augmented_count();
  s.samples_used = bank.samples_used;
  s.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

inline PretrainResult pretrain(const PretrainOptions& opt) {
  Rng rng = make_rng(opt.seed, 0xB4A7);
  const GoalBank bank = build_goal_bank(opt.arm, opt.episode.binning, opt.quota, opt.sample_budget, rng);
  return pretrain(opt, bank);
}

}  // namespace hpnq
