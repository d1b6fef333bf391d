#pragma once

// Sparse tabular Q-function, the one-step Q-learning update, epsilon-greedy
// action selection and neighbor-mean augmentation of never-visited entries.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hpnq/errors.hpp"
#include "hpnq/kinematics.hpp"
#include "hpnq/state_codec.hpp"

namespace hpnq {

using ActionId = std::uint16_t;

inline constexpr std::uint32_t kActionCount = 2 * kSegmentCount * kChamberCount;

// 32 single-chamber moves. id = segment * 8 + chamber * 2 + (raise ? 0 : 1).
struct ActionSpec {
  struct Move {
    std::size_t segment = 0;
    std::size_t chamber = 0;
    int direction = +1;

    friend bool operator==(const Move&, const Move&) = default;
  };

  double delta_p = 5.0;  // kPa

  static Move decode(ActionId id) {
    if (id >= kActionCount) throw DomainError("action id out of range");
    return {id / 8u, (id % 8u) / 2u, (id % 2u) == 0 ? +1 : -1};
  }

  static ActionId encode(const Move& m) {
    return static_cast<ActionId>(m.segment * 8 + m.chamber * 2 + (m.direction > 0 ? 0 : 1));
  }

  // Applies the move with saturation to [0, max_pressure]; at a bound the move
  // leaves the chamber unchanged.
  PressureVector apply(PressureVector p, ActionId id, double max_pressure) const {
    const Move m = decode(id);
    double& chamber = p(m.segment, m.chamber);
    chamber = std::clamp(chamber + m.direction * delta_p, 0.0, max_pressure);
    return p;
  }

  void validate() const {
    if (!std::isfinite(delta_p) || delta_p <= 0.0) throw DomainError("actions: delta_p must be > 0");
  }
};

struct HyperParams {
  double alpha = 0.1;
  double gamma = 0.6;
  double epsilon = 0.1;

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("learning: alpha must be in (0, 1]");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("learning: gamma must be in [0, 1)");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw DomainError("learning: epsilon must be in [0, 1]");
  }
};

enum EntryFlag : std::uint16_t {
  kTrained = 1u << 0,
  kAugmented = 1u << 1,
};

template <class Value>
class BasicQTable {
 public:
  using value_type = Value;

  struct Row {
    std::vector<Value> values;
    std::vector<std::uint16_t> flags;
  };

  explicit BasicQTable(std::uint32_t action_count = kActionCount) : action_count_(action_count) {
    if (action_count == 0 || action_count > 0xFFFFu) throw DomainError("action count must be in [1, 65535]");
  }

  std::uint32_t action_count() const { return action_count_; }

  const Row* find(StateIndex s) const {
    auto it = rows_.find(s);
    return it == rows_.end() ? nullptr : &it->second;
  }

  Value value(StateIndex s, ActionId a) const {
    check(s, a);
    const Row* r = find(s);
    return r ? r->values[a] : Value{0};
  }

  std::uint16_t flags(StateIndex s, ActionId a) const {
    check(s, a);
    const Row* r = find(s);
    return r ? r->flags[a] : std::uint16_t{0};
  }

  bool trained(StateIndex s, ActionId a) const { return (flags(s, a) & kTrained) != 0; }

  Value max_value(StateIndex s) const {
    const Row* r = find(s);
    if (!r) return Value{0};
    return *std::max_element(r->values.begin(), r->values.end());
  }

  void set(StateIndex s, ActionId a, Value v, std::uint16_t flags) {
    check(s, a);
    Row& r = row(s);
    r.values[a] = v;
    r.flags[a] = flags;
  }

  // Sorted state indices of all materialized rows.
  std::vector<StateIndex> states() const {
    std::vector<StateIndex> out;
    out.reserve(rows_.size());
    for (const auto& [s, r] : rows_) out.push_back(s);
    std::sort(out.begin(), out.end());
    return out;
  }

  std::size_t row_count() const { return rows_.size(); }

  std::size_t count_flag(std::uint16_t flag) const {
    std::size_t n = 0;
    for (const auto& [s, r] : rows_) n += std::count_if(r.flags.begin(), r.flags.end(), [&](auto f) { return (f & flag) != 0; });
    return n;
  }
  std::size_t trained_count() const { return count_flag(kTrained); }
  std::size_t augmented_count() const { return count_flag(kAugmented); }

  // Visits entries that differ from the initial state (nonzero bits or any
  // flag) in (state, action) order.
  template <class F>
  void for_each_entry(F&& f) const {
    for (StateIndex s : states()) {
      const Row& r = rows_.at(s);
      for (ActionId a = 0; a < action_count_; ++a) {
        if (!is_default(r.values[a], r.flags[a])) f(s, a, r.values[a], r.flags[a]);
      }
    }
  }

  std::size_t entry_count() const {
    std::size_t n = 0;
    for_each_entry([&](auto, auto, auto, auto) { ++n; });
    return n;
  }

  // Entry-wise comparison by bit pattern; absent rows equal all-default rows.
  friend bool operator==(const BasicQTable& a, const BasicQTable& b) {
    if (a.action_count_ != b.action_count_) return false;
    return a.contains_all_of(b) && b.contains_all_of(a);
  }

 private:
  static bool is_default(Value v, std::uint16_t flags) { return flags == 0 && !std::signbit(v) && v == Value{0}; }

  void check(StateIndex s, ActionId a) const {
    if (s >= kStateCount) throw DomainError("state index out of range");
    if (a >= action_count_) throw DomainError("action id out of range");
  }

  Row& row(StateIndex s) {
    auto [it, inserted] = rows_.try_emplace(s);
    if (inserted) {
      it->second.values.assign(action_count_, Value{0});
      it->second.flags.assign(action_count_, 0);
    }
    return it->second;
  }

  bool contains_all_of(const BasicQTable& other) const {
    for (const auto& [s, r] : other.rows_) {
      const Row* mine = find(s);
      for (ActionId a = 0; a < action_count_; ++a) {
        const Value v = mine ? mine->values[a] : Value{0};
        const std::uint16_t f = mine ? mine->flags[a] : 0;
        if (f != r.flags[a] || std::signbit(v) != std::signbit(r.values[a])) return false;
        if (!(v == r.values[a]) && !(std::isnan(v) && std::isnan(r.values[a]))) return false;
      }
    }
    return true;
  }

  std::uint32_t action_count_;
  std::unordered_map<StateIndex, Row> rows_;
};

using QTable = BasicQTable<float>;

// Q(s,a) <- Q(s,a) + alpha [r + gamma max_a' Q(s',a') - Q(s,a)]. A terminal
// transition does not bootstrap. Returns the stored value.
template <class Value>
Value q_update(BasicQTable<Value>& q, StateIndex s, ActionId a, double reward, StateIndex s_next,
               const HyperParams& hp, bool terminal = false) {
  if (!std::isfinite(reward)) throw DomainError("q_update: reward must be finite");
  const double current = static_cast<double>(q.value(s, a));
  const double next = terminal ? 0.0 : static_cast<double>(q.max_value(s_next));
  const auto updated = static_cast<Value>(current + hp.alpha * (reward + hp.gamma * next - current));
  q.set(s, a, updated, kTrained);
  return updated;
}

template <class Value>
Value q_update(BasicQTable<Value>& q, const DiscreteState& s, ActionId a, double reward, const DiscreteState& s_next,
               const HyperParams& hp, bool terminal = false) {
  return q_update(q, s.index(), a, reward, s_next.index(), hp, terminal);
}

// Greedy argmax with ties to the lowest id.
template <class Value>
ActionId greedy_action(const BasicQTable<Value>& q, StateIndex s) {
  const auto* row = q.find(s);
  if (!row) return 0;
  const auto best = std::max_element(row->values.begin(), row->values.end());
  return static_cast<ActionId>(best - row->values.begin());
}

// With probability epsilon a uniform random action, otherwise greedy. The
// generator is only consumed when epsilon > 0.
template <class Value, class Rng>
ActionId select_action(const BasicQTable<Value>& q, StateIndex s, double epsilon, Rng& rng) {
  if (epsilon > 0.0) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < epsilon) {
      std::uniform_int_distribution<std::uint32_t> pick(0, q.action_count() - 1);
      return static_cast<ActionId>(pick(rng));
    }
  }
  return greedy_action(q, s);
}

// States whose bin vector differs from `s` in exactly one dim by 1..radius
// steps, in (dim, -radius..+radius) order.
inline std::vector<StateIndex> neighbor_states(StateIndex s, int radius = 1) {
  std::vector<StateIndex> out;
  const DiscreteState ds = DiscreteState::unpack(s);
  StateIndex place = kStateCount / kBinsPerDim;  // 4^9 for dim 0
  for (std::size_t d = 0; d < kStateDims; ++d, place /= kBinsPerDim) {
    for (int step = -radius; step <= radius; ++step) {
      if (step == 0) continue;
      const int b = static_cast<int>(ds[d]) + step;
      if (b < 0 || b >= static_cast<int>(kBinsPerDim)) continue;
      out.push_back(static_cast<StateIndex>(static_cast<std::int64_t>(s) + static_cast<std::int64_t>(step) * place));
    }
  }
  return out;
}

template <class Value>
struct AugmentResult {
  BasicQTable<Value> table;
  std::size_t filled = 0;     // entries that were plain untrained before
  std::size_t refreshed = 0;  // entries already flagged augmented, recomputed
};

// Replaces each untrained entry that has at least one trained neighbor (same
// action) with the mean of those trained values. Reads only the input table,
// so the pass is synchronous; trained entries are never written.
template <class Value>
AugmentResult<Value> augment(const BasicQTable<Value>& q, int radius = 1) {
  if (radius < 1) throw DomainError("augment: radius must be >= 1");
  AugmentResult<Value> result{q};

  std::vector<StateIndex> candidates;
  for (StateIndex s : q.states()) {
    const auto* row = q.find(s);
    if (std::none_of(row->flags.begin(), row->flags.end(), [](auto f) { return (f & kTrained) != 0; })) continue;
    for (StateIndex n : neighbor_states(s, radius)) candidates.push_back(n);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  const std::uint32_t actions = q.action_count();
  std::vector<double> sum(actions);
  std::vector<std::uint32_t> count(actions);
  for (StateIndex s : candidates) {
    std::fill(sum.begin(), sum.end(), 0.0);
    std::fill(count.begin(), count.end(), 0u);
    for (StateIndex n : neighbor_states(s, radius)) {
      const auto* row = q.find(n);
      if (!row) continue;
      for (ActionId a = 0; a < actions; ++a) {
        if (row->flags[a] & kTrained) {
          sum[a] += static_cast<double>(row->values[a]);
          ++count[a];
        }
      }
    }
    for (ActionId a = 0; a < actions; ++a) {
      if (count[a] == 0) continue;
      const std::uint16_t f = q.flags(s, a);
      if (f & kTrained) continue;
      (f & kAugmented) ? ++result.refreshed : ++result.filled;
      result.table.set(s, a, static_cast<Value>(sum[a] / count[a]), kAugmented);
    }
  }
  return result;
}

}  // namespace hpnq
