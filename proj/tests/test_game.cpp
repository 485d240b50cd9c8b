#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <filesystem>

#include "mrbear/errors.hpp"
#include "mrbear/game.hpp"
#include "mrbear/game_io.hpp"
#include "mrbear/planning.hpp"
#include "mrbear/rng.hpp"

using namespace mrbear;
using namespace mrbear::game;

namespace {

StageGame identity_game(std::size_t n) {
  std::vector<double> u(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) u[i * n + i] = 1.0;
  return StageGame(n, n, std::move(u));
}

OpponentPolicy point_mass(std::size_t a, std::size_t b, std::size_t target) {
  std::vector<double> row(b, 0.0);
  row[target] = 1.0;
  return OpponentPolicy(0, OpponentKind::General, a, b, std::move(row));
}

}  // namespace

TEST(StageGame, Validation) {
  EXPECT_THROW(StageGame(2, 2, {0, 0, 0}), InvalidArgument);
  EXPECT_THROW(StageGame(1, 1, {1.5}), InvalidArgument);
  EXPECT_THROW(StageGame(0, 1, {}), InvalidArgument);
  const StageGame g(2, 2, {0.1, 0.9, 0.4, 0.3});
  EXPECT_EQ(g.max_utility(0), 0.9);
  EXPECT_EQ(g.max_utility(1), 0.4);
}

TEST(OpponentPolicy, DomainSizes) {
  const auto gen = random_opponent(2, 3, 2, OpponentKind::General, 1);
  EXPECT_EQ(gen.domain_size(), 36u);
  const auto obl = random_opponent(2, 3, 2, OpponentKind::SelfOblivious, 1);
  EXPECT_EQ(obl.domain_size(), 4u);
  EXPECT_THROW(OpponentPolicy(1, OpponentKind::General, 2, 2, {0.5, 0.5}), InvalidArgument);
  EXPECT_THROW(OpponentPolicy(0, OpponentKind::General, 2, 2, {0.5, 0.6}), InvalidArgument);
}

TEST(Encoding, Examples) {
  HistoryState h(2, 2, 2);
  h.push({0, 1});
  h.push({1, 0});
  EXPECT_EQ(h.encode(0), 0u);
  EXPECT_EQ(h.encode(1), 2u);
  // Newest (1,0) -> 2, older (0,1) -> 1.
  EXPECT_EQ(h.encode(2), 2u + 4u * 1u);
  const auto back = decode_state(h.encode(2), 2, 2, 2);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], (Pair{1, 0}));
  EXPECT_EQ(back[1], (Pair{0, 1}));
  EXPECT_THROW(h.encode(3), OrderTooLarge);
}

TEST(Encoding, OrderZeroAlwaysZero) {
  HistoryState h(3, 3, 2);
  EXPECT_EQ(h.encode(0), 0u);
  h.push({2, 1});
  EXPECT_EQ(h.encode(0), 0u);
  EXPECT_THROW(h.encode(2), OrderTooLarge);
}

TEST(Encoding, ExhaustiveBijection) {
  for (auto [a, b] : {std::array<std::size_t, 2>{2, 2}, {2, 3}, {3, 2}, {3, 3}, {1, 4}}) {
    const std::size_t base = a * b;
    for (std::size_t order = 0; order <= 4; ++order) {
      const std::size_t n = state_count(base, order);
      if (n > 10'000) continue;
      for (std::size_t s = 0; s < n; ++s) {
        const auto pairs = decode_state(s, order, a, b);
        ASSERT_EQ(pairs.size(), order);
        ASSERT_EQ(encode_pairs(pairs, a, b), s);
        // Feed the same pairs through a ring buffer, oldest first.
        HistoryState h(order + 1, a, b);
        h.push({0, 0});
        for (std::size_t j = order; j-- > 0;) h.push(pairs[j]);
        ASSERT_EQ(h.encode(order), s);
      }
    }
  }
}

TEST(Encoding, ShiftMatchesHistory) {
  Rng rng(3);
  HistoryState h(3, 3, 2);
  for (int i = 0; i < 3; ++i) h.push({rng.below(3), rng.below(2)});
  for (int i = 0; i < 200; ++i) {
    const Pair p{rng.below(3), rng.below(2)};
    const std::size_t before = h.encode(3);
    h.push(p);
    EXPECT_EQ(shift_state(before, 3, p, 3, 2), h.encode(3));
  }
}

TEST(Encoding, StateCountGuard) {
  EXPECT_EQ(state_count(4, 0), 1u);
  EXPECT_EQ(state_count(4, 3), 64u);
  EXPECT_THROW(state_count(100, 10), TooLarge);
}

TEST(GameEnv, PointMassOpponent) {
  GameEnv env(random_stage_game(2, 3, 5), point_mass(2, 3, 2), 1, 9);
  for (std::size_t t = 0; t < 50; ++t) {
    const std::size_t a = t % 2;
    const auto out = env.step(a);
    EXPECT_EQ(out.opponent_action, 2u);
    EXPECT_EQ(out.reward, env.stage().utility(a, 2));
  }
  EXPECT_EQ(env.step_count(), 50u);
  EXPECT_THROW(env.step(2), IndexOutOfRange);
}

TEST(GameEnv, SeededDeterminism) {
  const auto stage = random_stage_game(2, 2, 1);
  const auto opp = random_opponent(2, 2, 2, OpponentKind::General, 2);
  GameEnv x(stage, opp, 3, 77);
  GameEnv y(stage, opp, 3, 77);
  EXPECT_EQ(x.initial_history(), y.initial_history());
  EXPECT_EQ(x.initial_history().size(), 3u);
  for (std::size_t t = 0; t < 1000; ++t) {
    const auto ox = x.step(t % 2);
    const auto oy = y.step(t % 2);
    ASSERT_EQ(ox.opponent_action, oy.opponent_action);
    ASSERT_EQ(ox.reward, oy.reward);
  }
}

TEST(GameEnv, SeedsAtLeastOpponentOrder) {
  const auto opp = random_opponent(2, 2, 3, OpponentKind::General, 2);
  GameEnv env(random_stage_game(2, 2, 1), opp, 1, 5);
  EXPECT_EQ(env.initial_history().size(), 3u);
  EXPECT_NO_THROW(env.state(3));
}

TEST(GameEnv, RewardIsExactUtility) {
  const auto stage = random_stage_game(3, 2, 4);
  GameEnv env(stage, random_opponent(3, 2, 1, OpponentKind::General, 5), 1, 6);
  Rng rng(7);
  for (int t = 0; t < 10'000; ++t) {
    const std::size_t a = rng.below(3);
    const auto out = env.step(a);
    ASSERT_EQ(out.reward, stage.utility(a, out.opponent_action));
    ASSERT_EQ(env.history().pair(0), (Pair{a, out.opponent_action}));
  }
}

TEST(GameEnv, SelfObliviousIgnoresOpponentActions) {
  // Condition b_t on (a_{t-1}, b_{t-1}); for a fixed a_{t-1} the law of b_t
  // must not depend on b_{t-1}.
  const auto opp = random_opponent(2, 3, 1, OpponentKind::SelfOblivious, 21);
  GameEnv env(random_stage_game(2, 3, 20), opp, 1, 22);
  Rng rng(23);
  std::array<std::array<std::array<double, 3>, 3>, 2> counts{};
  std::array<std::array<double, 3>, 2> totals{};
  Pair prev = env.history().pair(0);
  for (int t = 0; t < 12'000'000; ++t) {
    const std::size_t a = rng.below(2);
    const auto out = env.step(a);
    counts[prev.a][prev.b][out.opponent_action] += 1;
    totals[prev.a][prev.b] += 1;
    prev = {a, out.opponent_action};
  }
  for (std::size_t a = 0; a < 2; ++a) {
    for (std::size_t b = 0; b < 3; ++b) {
      ASSERT_GT(totals[a][b], 1e6);
      for (std::size_t nb = 0; nb < 3; ++nb) {
        const double freq = counts[a][b][nb] / totals[a][b];
        EXPECT_NEAR(freq, opp.prob(a, nb), 3e-3);
        EXPECT_NEAR(freq, counts[a][0][nb] / totals[a][0], 3e-3);
      }
    }
  }
}

TEST(GameEnv, MarkovConsistency) {
  const auto stage = random_stage_game(2, 2, 30);
  const auto opp = random_opponent(2, 2, 1, OpponentKind::General, 31);
  const auto mdp = induced_mdp(stage, opp, 1);
  GameEnv env(stage, opp, 1, 32);
  Rng rng(33);
  std::vector<double> counts(4 * 2 * 4, 0.0);
  std::vector<double> visits(4 * 2, 0.0);
  for (int t = 0; t < 8'000'000; ++t) {
    const std::size_t s = env.state(1);
    const std::size_t a = rng.below(2);
    env.step(a);
    counts[(s * 2 + a) * 4 + env.state(1)] += 1;
    visits[s * 2 + a] += 1;
  }
  for (std::size_t s = 0; s < 4; ++s) {
    for (std::size_t a = 0; a < 2; ++a) {
      ASSERT_GT(visits[s * 2 + a], 5e5);
      double l1 = 0.0;
      for (std::size_t n = 0; n < 4; ++n) {
        l1 += std::abs(counts[(s * 2 + a) * 4 + n] / visits[s * 2 + a] - mdp.p(s, a, n));
      }
      EXPECT_LE(l1, 0.02);
    }
  }
}

TEST(GameEnv, NonMarkovAtShortOrder) {
  // Order-2 opponent: b_t = 0 with probability 0.9 when a_{t-2} = 0 and 0.1
  // otherwise. Conditioned on the order-1 state alone, splitting by the
  // deeper pair exposes the 0.8 gap.
  std::vector<double> rows(16 * 2);
  for (std::size_t ctx = 0; ctx < 16; ++ctx) {
    const auto pairs = decode_state(ctx, 2, 2, 2);
    const double p0 = pairs[1].a == 0 ? 0.9 : 0.1;
    rows[ctx * 2] = p0;
    rows[ctx * 2 + 1] = 1.0 - p0;
  }
  const OpponentPolicy opp(2, OpponentKind::General, 2, 2, rows);
  GameEnv env(identity_game(2), opp, 2, 40);
  Rng rng(41);
  std::array<std::array<double, 2>, 4> zero{};
  std::array<std::array<double, 2>, 4> total{};
  for (int t = 0; t < 2'000'000; ++t) {
    const std::size_t short_state = env.state(1);
    const std::size_t deep = env.history().pair(1).a;
    const auto out = env.step(rng.below(2));
    total[short_state][deep] += 1;
    if (out.opponent_action == 0) zero[short_state][deep] += 1;
  }
  for (std::size_t s = 0; s < 4; ++s) {
    const double gap = zero[s][0] / total[s][0] - zero[s][1] / total[s][1];
    EXPECT_GE(gap, 0.8 - 0.01);
  }
  EXPECT_THROW(induced_mdp(identity_game(2), opp, 1), OrderTooSmall);
}

TEST(InducedMdp, Bandit) {
  const auto stage = random_stage_game(3, 2, 50);
  const OpponentPolicy opp(0, OpponentKind::General, 3, 2, {0.25, 0.75});
  const auto m = induced_mdp(stage, opp, 0);
  ASSERT_EQ(m.num_states(), 1u);
  for (std::size_t a = 0; a < 3; ++a) {
    EXPECT_NEAR(m.r(0, a), 0.25 * stage.utility(a, 0) + 0.75 * stage.utility(a, 1), 1e-15);
  }
}

TEST(InducedMdp, Structure) {
  const auto stage = random_stage_game(2, 2, 60);
  const auto opp = random_opponent(2, 2, 1, OpponentKind::General, 61);
  const auto m = induced_mdp(stage, opp, 1);
  ASSERT_EQ(m.num_states(), 4u);
  for (std::size_t s = 0; s < 4; ++s) {
    for (std::size_t a = 0; a < 2; ++a) {
      std::size_t nonzero = 0;
      for (double p : m.row(s, a)) nonzero += p > 0.0;
      EXPECT_LE(nonzero, 2u);
      for (std::size_t b = 0; b < 2; ++b) {
        EXPECT_EQ(m.p(s, a, shift_state(s, 1, {a, b}, 2, 2)), opp.prob(s, b));
      }
    }
  }
}

TEST(InducedMdp, GainInvariantAcrossOrders) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto stage = random_stage_game(2, 2, 70 + seed);
    for (auto kind : {OpponentKind::General, OpponentKind::SelfOblivious}) {
      const auto opp = random_opponent(2, 2, 1, kind, 80 + seed);
      const double g1 = mdp::solve_optimal(induced_mdp(stage, opp, 1), 1e-11).gain_bias.gain;
      const double g2 = mdp::solve_optimal(induced_mdp(stage, opp, 2), 1e-11).gain_bias.gain;
      EXPECT_NEAR(g1, g2, 1e-6);
    }
  }
}

TEST(InducedMdp, SelfObliviousLearnerActionChain) {
  const auto stage = random_stage_game(3, 2, 90);
  const auto opp = random_opponent(3, 2, 2, OpponentKind::SelfOblivious, 91);
  const auto m = learner_action_mdp(stage, opp, 2);
  ASSERT_EQ(m.num_states(), 9u);
  for (std::size_t s = 0; s < 9; ++s) {
    for (std::size_t a = 0; a < 3; ++a) {
      std::size_t nonzero = 0;
      for (double p : m.row(s, a)) nonzero += p > 0.0;
      EXPECT_EQ(nonzero, 1u);
    }
  }
  const double g_pairs = mdp::solve_optimal(induced_mdp(stage, opp, 2), 1e-11).gain_bias.gain;
  const double g_actions = mdp::solve_optimal(m, 1e-11).gain_bias.gain;
  EXPECT_NEAR(g_pairs, g_actions, 1e-6);
  EXPECT_THROW(learner_action_mdp(stage, random_opponent(3, 2, 1, OpponentKind::General, 1), 1),
               InvalidArgument);
}

TEST(RandomOpponent, MixingFloor) {
  const auto flat = random_opponent(2, 3, 1, OpponentKind::General, 1, 1.0);
  for (double p : flat.rows()) EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto opp = random_opponent(2, 3, 2, OpponentKind::General, seed);
    for (double p : opp.rows()) EXPECT_GE(p, 0.05 / 3.0 - 1e-15);
  }
  EXPECT_EQ(random_opponent(2, 2, 1, OpponentKind::General, 4),
            random_opponent(2, 2, 1, OpponentKind::General, 4));
}

TEST(RandomOpponent, InducedChainHasUniqueStationaryLaw) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto opp = random_opponent(2, 2, 1, OpponentKind::General, seed);
    const auto m = induced_mdp(random_stage_game(2, 2, seed), opp, 1);
    const auto p = mdp::induced_chain(m, mdp::StationaryPolicy::uniform(4, 2));
    EXPECT_NO_THROW(mdp::stationary_distribution(p));
  }
}

TEST(GameIo, RoundTrip) {
  const auto stage = random_stage_game(2, 3, 100);
  const auto opp = random_opponent(2, 3, 1, OpponentKind::SelfOblivious, 101);
  const auto dir = std::filesystem::temp_directory_path();
  write_json_file(to_json(stage), dir / "mrbear_stage.json");
  write_json_file(to_json(opp), dir / "mrbear_opp.json");
  const auto stage2 = stage_from_json(read_json_file(dir / "mrbear_stage.json"));
  const auto opp2 = opponent_from_json(read_json_file(dir / "mrbear_opp.json"));
  EXPECT_EQ(stage2.utility_table(), stage.utility_table());
  EXPECT_EQ(opp2, opp);
  EXPECT_THROW(parse_kind("learner_oblivious"), ParseError);
  EXPECT_THROW(read_json_file(dir / "mrbear_missing_file.json"), IoError);
}
