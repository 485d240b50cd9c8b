#pragma once

#include <cstddef>
#include <functional>
#include <json.hpp>
#include <vector>

#include "mrbear/game.hpp"
#include "mrbear/mdp.hpp"

namespace mrbear::learner {

// Regret guarantee B_i(N, delta) = C_i sqrt(N ln(N / delta)) of the base
// learner on model class i.
struct GuaranteeSpec {
  std::size_t class_order = 0;
  double coefficient = 0.0;  // C_i
  double universal_constant = 1.0;
  double c_h = 1.0;
  double reward_span = 1.0;
};

// C_i = universal_constant^(1/3) sqrt((1 + c_h) sp(r) S_i A), S_i = (A B)^i.
GuaranteeSpec make_guarantee_spec(std::size_t class_order, std::size_t num_learner_actions,
                                  std::size_t num_opponent_actions, double universal_constant,
                                  double c_h, double reward_span = 1.0);

// Throws DomainError unless N >= 1, 0 < delta < 1 and N / delta > 1.
double guarantee_B(const GuaranteeSpec& spec, double n, double delta);

struct GainRecord {
  std::size_t epoch = 0;
  double optimistic_gain = 0.0;
  std::size_t length = 0;
};

// Everything the base learner of one model class remembers between epochs.
struct LearnerState {
  LearnerState(const game::StageGame& stage, std::size_t class_order);

  std::size_t class_order;
  std::size_t num_states;
  std::size_t num_actions;
  std::size_t num_opponent_actions;

  std::vector<std::size_t> visit_counts;        // N(s, a)
  std::vector<std::size_t> epoch_start_counts;  // N(s, a) when the epoch began
  std::vector<std::size_t> epoch_counts;        // visits within the epoch
  std::vector<std::size_t> psi_counts;          // (s, b) opponent observations
  std::vector<std::size_t> policy;              // action per state
  std::vector<double> evi_value;
  std::size_t total_steps = 0;
  std::size_t epoch_index = 0;  // epochs started so far
  bool epoch_open = false;      // an epoch was cut short by the step budget
  std::vector<GainRecord> optimistic_gain_history;

  std::size_t state_observations(std::size_t s) const;
  void update_statistics(std::size_t s, std::size_t a, std::size_t b);
};

// L1 confidence balls around the empirical opponent rows of each class
// state. The utility is known, so reward uncertainty follows from psi.
struct ConfidenceRegion {
  std::size_t num_states = 0;
  std::size_t num_opponent_actions = 0;
  std::vector<double> psi_hat;  // (s, b), uniform where nothing was observed
  std::vector<double> radii;    // per state, in [0, 2]
};

double psi_radius(std::size_t observations, std::size_t num_states,
                  std::size_t num_opponent_actions, double delta);
ConfidenceRegion confidence_region(const LearnerState& state, double delta);

// Maximises p . v over the L1 ball of the given radius around p_hat,
// intersected with the simplex. Writes the maximiser into `out`.
void optimistic_row(std::span<const double> p_hat, std::span<const double> values, double radius,
                    std::span<double> out);

struct EviResult {
  std::vector<std::size_t> policy;
  double optimistic_gain = 0.0;
  std::vector<double> value;
  std::size_t iterations = 0;
};

EviResult extended_value_iteration(const ConfidenceRegion& region, const game::StageGame& stage,
                                   std::size_t class_order, double epsilon);

struct StepInfo {
  std::size_t state = 0;
  std::size_t action = 0;
  std::size_t opponent_action = 0;
  double reward = 0.0;
};
using StepObserver = std::function<void(const StepInfo&)>;

struct EpochResult {
  std::size_t steps = 0;
  double reward_sum = 0.0;
  bool completed = false;  // false when the step budget cut the epoch short
};

// Plays one doubling-trick epoch against env, at most step_budget steps.
// An epoch cut short by the budget is resumed by the next call.
EpochResult run_epoch(LearnerState& state, game::GameEnv& env, double delta,
                      std::size_t step_budget, const StepObserver& observer = {});

inline constexpr int kCheckpointVersion = 1;
nlohmann::json to_json(const LearnerState& state);
LearnerState learner_from_json(const nlohmann::json& doc, const game::StageGame& stage);

}  // namespace mrbear::learner
