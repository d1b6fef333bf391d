#include <cmath>
#include <random>
#include <set>
#include <tuple>

#include <gtest/gtest.h>

#include "hpnq/qtable.hpp"
#include "hpnq/random.hpp"
#include "oracles/gridworld.hpp"

namespace hpnq {
namespace {

DiscreteState state_with(std::size_t dim, std::uint8_t bin, DiscreteState::Bins base = {}) {
  base[dim] = bin;
  return DiscreteState(base);
}

TEST(ActionSpec, IdsAreBijective) {
  std::set<std::tuple<std::size_t, std::size_t, int>> seen;
  for (ActionId id = 0; id < kActionCount; ++id) {
    const auto m = ActionSpec::decode(id);
    EXPECT_LT(m.segment, kSegmentCount);
    EXPECT_LT(m.chamber, kChamberCount);
    EXPECT_EQ(ActionSpec::encode(m), id);
    seen.insert({m.segment, m.chamber, m.direction});
  }
  EXPECT_EQ(seen.size(), kActionCount);
  EXPECT_THROW(ActionSpec::decode(32), DomainError);
}

TEST(ActionSpec, ApplySaturates) {
  const ActionSpec spec;
  PressureVector p;
  p(1, 2) = 58.0;
  const PressureVector up = spec.apply(p, ActionSpec::encode({1, 2, +1}), 60.0);
  EXPECT_EQ(up(1, 2), 60.0);
  EXPECT_EQ(spec.apply(up, ActionSpec::encode({1, 2, +1}), 60.0), up);
  EXPECT_EQ(spec.apply(PressureVector{}, ActionSpec::encode({0, 0, -1}), 60.0), PressureVector{});
  const PressureVector down = spec.apply(p, ActionSpec::encode({1, 2, -1}), 60.0);
  EXPECT_EQ(down(1, 2), 53.0);
}

TEST(QUpdate, FromZero) {
  QTable q;
  const HyperParams hp{0.1, 0.9, 0.0};
  q_update(q, 10, 3, 1.0, 11, hp);
  EXPECT_NEAR(q.value(10, 3), 0.1, 1e-7);
  EXPECT_TRUE(q.trained(10, 3));
}

TEST(QUpdate, WithBootstrap) {
  BasicQTable<double> q;
  q.set(10, 3, 0.5, kTrained);
  q.set(11, 7, 2.0, kTrained);
  q_update(q, 10, 3, 1.0, 11, HyperParams{0.1, 0.9, 0.0});
  EXPECT_NEAR(q.value(10, 3), 0.73, 1e-12);
}

TEST(QUpdate, ShrinksTowardZero) {
  BasicQTable<double> q;
  q.set(5, 0, 2.0, kTrained);
  for (double alpha : {0.1, 0.5, 1.0}) {
    const double before = q.value(5, 0);
    q_update(q, 5, 0, 0.0, 6, HyperParams{alpha, 0.9, 0.0});
    EXPECT_NEAR(q.value(5, 0), before * (1 - alpha), 1e-12);
  }
}

TEST(QUpdate, TerminalDoesNotBootstrap) {
  BasicQTable<double> q;
  q.set(11, 0, 5.0, kTrained);
  q_update(q, 10, 0, 1.0, 11, HyperParams{0.5, 0.9, 0.0}, true);
  EXPECT_NEAR(q.value(10, 0), 0.5, 1e-12);
}

TEST(QUpdate, TouchesExactlyOneEntry) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<StateIndex> st(0, kStateCount - 1);
  std::uniform_int_distribution<int> act(0, kActionCount - 1);
  QTable q;
  for (int i = 0; i < 50; ++i) q.set(st(rng), act(rng), 0.25f * i, kTrained);
  for (int i = 0; i < 200; ++i) {
    const QTable before = q;
    const StateIndex s = st(rng);
    const ActionId a = act(rng);
    q_update(q, s, a, 0.7, st(rng), HyperParams{});
    std::size_t changed = 0;
    for (StateIndex x : q.states()) {
      for (ActionId b = 0; b < kActionCount; ++b) {
        if (q.value(x, b) != before.value(x, b) || q.flags(x, b) != before.flags(x, b)) {
          ++changed;
          EXPECT_EQ(x, s);
          EXPECT_EQ(b, a);
        }
      }
    }
    EXPECT_LE(changed, 1u);
  }
}

TEST(QUpdate, RejectsNonFiniteReward) {
  QTable q;
  EXPECT_THROW(q_update(q, 0, 0, std::nan(""), 1, HyperParams{}), DomainError);
  EXPECT_THROW(q_update(q, 0, 0, INFINITY, 1, HyperParams{}), DomainError);
}

TEST(HyperParams, Validate) {
  EXPECT_NO_THROW(HyperParams{}.validate());
  EXPECT_THROW((HyperParams{0.0, 0.5, 0.1}.validate()), DomainError);
  EXPECT_THROW((HyperParams{0.5, 1.0, 0.1}.validate()), DomainError);
  EXPECT_THROW((HyperParams{0.5, 0.5, 1.1}.validate()), DomainError);
}

TEST(SelectAction, GreedyUniqueMax) {
  QTable q;
  for (ActionId a = 0; a < kActionCount; ++a) q.set(9, a, 0.1f * (a % 5), kTrained);
  q.set(9, 7, 10.0f, kTrained);
  Rng rng(1);
  EXPECT_EQ(select_action(q, 9, 0.0, rng), 7);
}

TEST(SelectAction, TiesGoToLowestId) {
  QTable q;
  Rng rng(1);
  EXPECT_EQ(select_action(q, 9, 0.0, rng), 0);
  for (ActionId a = 0; a < kActionCount; ++a) q.set(9, a, -1.0f, kTrained);
  EXPECT_EQ(select_action(q, 9, 0.0, rng), 0);
  q.set(9, 20, 3.0f, kTrained);
  q.set(9, 12, 3.0f, kTrained);
  EXPECT_EQ(select_action(q, 9, 0.0, rng), 12);
}

TEST(SelectAction, GreedyDoesNotConsumeRng) {
  QTable q;
  Rng a(42);
  Rng b(42);
  select_action(q, 0, 0.0, a);
  EXPECT_EQ(a(), b());
}

TEST(SelectAction, FullExplorationIsUniform) {
  QTable q;
  q.set(0, 5, 100.0f, kTrained);
  Rng rng(2024);
  const int n = 100000;
  std::array<int, kActionCount> counts{};
  for (int i = 0; i < n; ++i) ++counts[select_action(q, 0, 1.0, rng)];
  const double p = 1.0 / kActionCount;
  const double sigma = std::sqrt(n * p * (1 - p));
  for (ActionId a = 0; a < kActionCount; ++a) EXPECT_LT(std::abs(counts[a] - n * p), 3 * sigma) << "action " << a;
}

TEST(SelectAction, ArgmaxInvariantUnderShiftAndScale) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> pos(0.1, 10.0);
  Rng unused(0);
  for (int i = 0; i < 500; ++i) {
    BasicQTable<double> q;
    BasicQTable<double> shifted;
    BasicQTable<double> scaled;
    const double c = 10 * n(rng);
    const double k = pos(rng);
    for (ActionId a = 0; a < kActionCount; ++a) {
      const double v = std::round(n(rng) * 4) / 4;  // quantized to exercise ties
      q.set(1, a, v, kTrained);
      shifted.set(1, a, v + c, kTrained);
      scaled.set(1, a, v * k, kTrained);
    }
    const ActionId base = select_action(q, 1, 0.0, unused);
    EXPECT_EQ(select_action(shifted, 1, 0.0, unused), base);
    EXPECT_EQ(select_action(scaled, 1, 0.0, unused), base);
  }
}

TEST(Augment, MeanOfTrainedNeighbors) {
  QTable q;
  const DiscreteState s = state_with(3, 1);
  q.set(state_with(3, 0).index(), 4, 1.0f, kTrained);
  q.set(state_with(3, 2).index(), 4, 3.0f, kTrained);
  const auto out = augment(q);
  EXPECT_FLOAT_EQ(out.table.value(s.index(), 4), 2.0f);
  EXPECT_EQ(out.table.flags(s.index(), 4), kAugmented);
  EXPECT_FALSE(out.table.trained(s.index(), 4));
}

TEST(Augment, NoTrainedNeighborsLeavesZero) {
  QTable q;
  q.set(state_with(3, 0).index(), 4, 1.0f, kTrained);
  const auto out = augment(q);
  const DiscreteState far = state_with(3, 3);
  EXPECT_EQ(out.table.value(far.index(), 4), 0.0f);
  EXPECT_EQ(out.table.flags(far.index(), 4), 0);
  // Diagonal neighbors are not adjacent.
  const DiscreteState diag = state_with(4, 1, state_with(3, 1).bins());
  EXPECT_EQ(out.table.value(diag.index(), 4), 0.0f);
  // Other actions of an adjacent state stay untouched.
  EXPECT_EQ(out.table.flags(state_with(3, 1).index(), 5), 0);
}

TEST(Augment, FullyTrainedTableIsIdentity) {
  BasicQTable<double> q(2);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n;
  for (StateIndex s = 0; s < 64; ++s) {
    for (ActionId a = 0; a < 2; ++a) q.set(s, a, n(rng), kTrained);
  }
  const auto out = augment(q);
  for (StateIndex s = 0; s < 64; ++s) {
    for (ActionId a = 0; a < 2; ++a) {
      EXPECT_EQ(out.table.value(s, a), q.value(s, a));
      EXPECT_EQ(out.table.flags(s, a), kTrained);
    }
  }
}

TEST(Augment, NeverWritesTrainedAndIsIdempotent) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<StateIndex> st(0, 4095);
  std::uniform_int_distribution<int> act(0, kActionCount - 1);
  std::normal_distribution<float> n;
  QTable q;
  for (int i = 0; i < 3000; ++i) q.set(st(rng), act(rng), n(rng), kTrained);
  const auto once = augment(q);
  EXPECT_GT(once.filled, 0u);
  EXPECT_EQ(once.refreshed, 0u);
  q.for_each_entry([&](StateIndex s, ActionId a, float v, std::uint16_t f) {
    if (f & kTrained) {
      EXPECT_EQ(once.table.value(s, a), v);
      EXPECT_EQ(once.table.flags(s, a), f);
    }
  });
  const auto twice = augment(once.table);
  EXPECT_EQ(twice.filled, 0u);
  EXPECT_EQ(twice.refreshed, once.filled);
  EXPECT_TRUE(twice.table == once.table);
}

TEST(Augment, RadiusTwoReachesFurther) {
  QTable q;
  q.set(state_with(6, 0).index(), 1, 4.0f, kTrained);
  EXPECT_EQ(augment(q, 1).table.value(state_with(6, 2).index(), 1), 0.0f);
  EXPECT_EQ(augment(q, 2).table.value(state_with(6, 2).index(), 1), 4.0f);
  EXPECT_THROW(augment(q, 0), DomainError);
}

TEST(NeighborStates, CountsAtCornerAndCenter) {
  EXPECT_EQ(neighbor_states(0).size(), kStateDims);
  const DiscreteState mid({1, 1, 1, 1, 1, 2, 2, 2, 2, 2});
  EXPECT_EQ(neighbor_states(mid.index()).size(), 2 * kStateDims);
  for (StateIndex n : neighbor_states(mid.index())) {
    const DiscreteState other = DiscreteState::unpack(n);
    int diff = 0;
    for (std::size_t d = 0; d < kStateDims; ++d) diff += std::abs(other[d] - mid[d]);
    EXPECT_EQ(diff, 1);
  }
}

TEST(QLearning, ConvergesToValueIterationOnGridworld) {
  using oracle::Gridworld;
  const double gamma = 0.9;
  const auto reference = oracle::value_iteration(gamma);
  BasicQTable<double> q(Gridworld::kActions);
  const HyperParams hp{0.5, gamma, 0.0};
  for (int sweep = 0; sweep < 100000; ++sweep) {
    for (int s = 0; s < Gridworld::kStates; ++s) {
      if (s == Gridworld::kGoal) continue;
      for (int a = 0; a < Gridworld::kActions; ++a) {
        const auto st = Gridworld::step(s, a);
        q_update(q, s, a, st.reward, st.next, hp, st.terminal);
      }
    }
  }
  double worst = 0.0;
  for (int s = 0; s < Gridworld::kStates; ++s) {
    if (s == Gridworld::kGoal) continue;
    for (int a = 0; a < Gridworld::kActions; ++a) worst = std::max(worst, std::abs(q.value(s, a) - reference[s][a]));
  }
  EXPECT_LT(worst, 1e-6);
  EXPECT_NEAR(reference[23][3], 1.0, 1e-15);
  EXPECT_NEAR(reference[0][1], -0.04 * (1 - std::pow(gamma, 7)) / (1 - gamma) + std::pow(gamma, 7), 1e-12);
}

}  // namespace
}  // namespace hpnq
