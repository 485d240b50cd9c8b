#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mrbear/game.hpp"
#include "mrbear/learner.hpp"

namespace mrbear::selector {

struct SelectorConfig {
  std::size_t num_classes = 1;  // M
  std::size_t horizon = 0;      // T
  double delta = 0.01;
  double c_h = 1.0;
  double alpha = 0.0;
  double beta = 0.0;
  std::size_t warmup_steps = 9;
};

// Warm-up length max(ceil(c_h^5), 9), as a real number of steps.
std::size_t warmup_length(double c_h);
// alpha = (ln w + 1) / (2 ln w) with w = max(c_h^5, 9).
double balance_alpha(double c_h);

// Throws HorizonTooSmall when T < M * warmup_steps and InvalidArgument on
// malformed inputs. specs[i] is the guarantee of class i.
SelectorConfig derive_constants(std::size_t num_classes, std::size_t horizon, double delta,
                                double c_h, std::span<const learner::GuaranteeSpec> specs);

struct ClassRecord {
  ClassRecord(const game::StageGame& stage, learner::GuaranteeSpec guarantee);

  std::size_t class_order;
  std::size_t steps = 0;  // N_i
  double reward_sum = 0.0;
  bool active = true;
  std::optional<std::size_t> eliminated_at;  // outer epoch of elimination
  learner::LearnerState learner;
  learner::GuaranteeSpec spec;
};

enum class TestOutcome { Keep, Eliminate };

// Eliminates class i iff (B_i(N_i) + R_i) / N_i < max_{j >= i} (R_j - 2 c_h) / N_j,
// the max ranging over every class with data, active or not.
TestOutcome misspecification_test(std::span<const ClassRecord> records, std::size_t i,
                                  const SelectorConfig& config);

// Active class with the smallest B_i(N_i); lowest index on ties. Throws
// AllEliminated when no class is active.
std::size_t select_class(std::span<const ClassRecord> records, const SelectorConfig& config);

struct BalanceCheck {
  std::size_t i = 0;
  std::size_t j = 0;
  int part = 1;  // 1: guarantee balance, 2: step-count ratio
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = true;
};

// Both balance inequalities for every ordered pair of active classes, given
// step counts at the end of the current epoch (records) and of the
// previous one.
std::vector<BalanceCheck> check_balance(std::span<const ClassRecord> records,
                                        std::span<const std::size_t> previous_steps,
                                        const SelectorConfig& config, double delta);

#pragma pack(push, 1)
struct StepRecord {
  std::uint32_t t;      // 1-based
  std::uint32_t epoch;  // outer epoch; 0 is the warm-up
  std::uint32_t state;  // state index in the acting class's space
  std::uint8_t cls;
  std::uint8_t action;
  std::uint8_t opponent_action;
  double reward;
};
#pragma pack(pop)

// True when the interaction content (t, class, state, actions, reward)
// matches, ignoring epoch labels.
bool same_interaction(const StepRecord& x, const StepRecord& y) noexcept;

struct EpochRecord {
  std::size_t k = 0;
  std::size_t cls = 0;
  std::size_t length = 0;
  std::vector<bool> active;               // active set when the class was picked
  std::vector<std::size_t> eliminated;    // classes removed by this epoch's tests
};

struct ClassSummary {
  std::size_t class_order = 0;
  double coefficient = 0.0;
  std::size_t steps = 0;
  double reward_sum = 0.0;
  bool active = true;
  std::optional<std::size_t> eliminated_at;
  std::size_t learner_epochs = 0;
};

struct RunTrace {
  std::size_t horizon = 0;
  double total_reward = 0.0;
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  std::vector<ClassSummary> classes;
  std::vector<game::Pair> initial_history;
  std::size_t balance_checks = 0;
  std::vector<BalanceCheck> balance_failures;
};

struct RunOptions {
  bool record_steps = true;
  bool check_balance = false;
};

// Algorithm: warm up every class, then alternate misspecification tests,
// argmin-B selection and one learner epoch of the selected class, until
// exactly config.horizon interactions have happened.
RunTrace run_mrbear(const SelectorConfig& config, game::GameEnv& env,
                    std::span<const learner::GuaranteeSpec> specs, const RunOptions& options = {});

// The base learner alone on one class for `horizon` steps, in the same
// trace format (a single class labelled `class_order`).
RunTrace run_single_class(game::GameEnv& env, std::size_t class_order, std::size_t horizon,
                          double delta, const RunOptions& options = {});

struct Regret {
  double total = 0.0;
  std::vector<double> per_class;
};

Regret compute_regret(const RunTrace& trace, double g_star);

// 26 M T delta clipped to 1: the failure probability of the guarantee.
double failure_probability_bound(std::size_t num_classes, std::size_t horizon, double delta);

}  // namespace mrbear::selector
