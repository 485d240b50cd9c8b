#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mrbear/mdp.hpp"
#include "mrbear/rng.hpp"

namespace mrbear::game {

// Two-player stage game; only the learner's utility matters.
class StageGame {
 public:
  StageGame(std::size_t num_learner_actions, std::size_t num_opponent_actions,
            std::vector<double> utility);

  std::size_t num_learner_actions() const noexcept { return num_learner_actions_; }
  std::size_t num_opponent_actions() const noexcept { return num_opponent_actions_; }
  double utility(std::size_t a, std::size_t b) const noexcept {
    return utility_[a * num_opponent_actions_ + b];
  }
  const std::vector<double>& utility_table() const noexcept { return utility_; }
  double max_utility(std::size_t a) const noexcept;

 private:
  std::size_t num_learner_actions_;
  std::size_t num_opponent_actions_;
  std::vector<double> utility_;
};

StageGame random_stage_game(std::size_t num_learner_actions, std::size_t num_opponent_actions,
                            std::uint64_t seed);

enum class OpponentKind { General, SelfOblivious };

// One interaction round.
struct Pair {
  std::size_t a = 0;
  std::size_t b = 0;
  friend bool operator==(const Pair&, const Pair&) = default;
};

// Finite-memory opponent strategy psi of order m. Rows are indexed by the
// encoded context: the last m pairs in radix A*B for General opponents,
// the last m learner actions in radix A for SelfOblivious ones. In both
// cases the most recent element sits in the lowest digit.
class OpponentPolicy {
 public:
  OpponentPolicy(std::size_t order, OpponentKind kind, std::size_t num_learner_actions,
                 std::size_t num_opponent_actions, std::vector<double> rows);

  std::size_t order() const noexcept { return order_; }
  OpponentKind kind() const noexcept { return kind_; }
  std::size_t num_learner_actions() const noexcept { return num_learner_actions_; }
  std::size_t num_opponent_actions() const noexcept { return num_opponent_actions_; }
  std::size_t domain_size() const noexcept { return domain_size_; }

  std::span<const double> row(std::size_t context) const noexcept {
    return {rows_.data() + context * num_opponent_actions_, num_opponent_actions_};
  }
  double prob(std::size_t context, std::size_t b) const noexcept {
    return rows_[context * num_opponent_actions_ + b];
  }
  const std::vector<double>& rows() const noexcept { return rows_; }

  // Context index of a pair-encoded state of order >= order().
  std::size_t context_of_state(std::size_t state) const;

  friend bool operator==(const OpponentPolicy&, const OpponentPolicy&) = default;

 private:
  std::size_t order_;
  OpponentKind kind_;
  std::size_t num_learner_actions_;
  std::size_t num_opponent_actions_;
  std::size_t domain_size_;
  std::vector<double> rows_;
};

// Number of distinct histories of the given order over `base` symbols;
// throws TooLarge when it does not fit comfortably in memory.
std::size_t state_count(std::size_t base, std::size_t order);

std::size_t pair_index(std::size_t a, std::size_t b, std::size_t num_opponent_actions) noexcept;

// Radix-(A*B) encoding, pairs given newest first.
std::size_t encode_pairs(std::span<const Pair> newest_first, std::size_t num_learner_actions,
                         std::size_t num_opponent_actions);
// Inverse of encode_pairs for a state of the given order.
std::vector<Pair> decode_state(std::size_t state, std::size_t order,
                               std::size_t num_learner_actions, std::size_t num_opponent_actions);

// Successor of a pair-encoded state of the given order after playing (a, b).
std::size_t shift_state(std::size_t state, std::size_t order, Pair p,
                        std::size_t num_learner_actions, std::size_t num_opponent_actions) noexcept;

// Bounded record of the most recent interactions.
class HistoryState {
 public:
  HistoryState(std::size_t capacity, std::size_t num_learner_actions,
               std::size_t num_opponent_actions);

  void push(Pair p);
  // j = 0 is the most recent pair.
  Pair pair(std::size_t j) const;
  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t filled() const noexcept { return filled_; }

  // Pair-encoded state of the given order. Order 0 yields 0.
  std::size_t encode(std::size_t order) const;
  // Radix-A encoding of the last `order` learner actions.
  std::size_t encode_learner_actions(std::size_t order) const;

 private:
  std::size_t capacity_;
  std::size_t num_learner_actions_;
  std::size_t num_opponent_actions_;
  std::vector<Pair> ring_;
  std::size_t head_ = 0;  // slot of the next write
  std::size_t filled_ = 0;
};

struct StepOutcome {
  std::size_t opponent_action = 0;
  double reward = 0.0;
};

// Repeated game against a fixed finite-memory opponent. The history is
// seeded with max(memory, opponent order) uniformly random pairs drawn from
// the environment stream before the first step.
class GameEnv {
 public:
  GameEnv(StageGame stage, OpponentPolicy opponent, std::size_t memory, std::uint64_t seed);

  StepOutcome step(std::size_t learner_action);
  std::size_t state(std::size_t order) const { return history_.encode(order); }

  const StageGame& stage() const noexcept { return stage_; }
  const OpponentPolicy& opponent() const noexcept { return opponent_; }
  const HistoryState& history() const noexcept { return history_; }
  std::size_t step_count() const noexcept { return step_count_; }
  std::size_t memory() const noexcept { return history_.capacity(); }
  // Seed pairs, oldest first.
  const std::vector<Pair>& initial_history() const noexcept { return initial_history_; }

 private:
  std::size_t opponent_context() const;

  StageGame stage_;
  OpponentPolicy opponent_;
  HistoryState history_;
  Rng rng_;
  std::size_t step_count_ = 0;
  std::vector<Pair> initial_history_;
};

// Exact MDP over (A*B)^order histories with expected rewards and uniform
// initial distribution. Throws OrderTooSmall when order < opponent.order()
// and TooLarge beyond kMaxInducedStates states.
inline constexpr std::size_t kMaxInducedStates = 4096;
mdp::TabularMdp induced_mdp(const StageGame& stage, const OpponentPolicy& opponent,
                            std::size_t order);

// For SelfOblivious opponents: the MDP over A^order learner-action
// histories, whose transitions are deterministic.
mdp::TabularMdp learner_action_mdp(const StageGame& stage, const OpponentPolicy& opponent,
                                   std::size_t order);

// Rows drawn from the flat Dirichlet and mixed with the uniform row by
// weight mixing_floor.
OpponentPolicy random_opponent(std::size_t num_learner_actions, std::size_t num_opponent_actions,
                               std::size_t order, OpponentKind kind, std::uint64_t seed,
                               double mixing_floor = 0.05);

}  // namespace mrbear::game
