#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "mrbear/game.hpp"
#include "mrbear/mdp.hpp"

namespace mrbear::oracles {

inline constexpr std::size_t kMaxEnumeratedPolicies = 1'000'000;
inline constexpr std::size_t kMaxEnumeratedTrajectories = 2'000'000;

struct EnumerationResult {
  double best_gain = 0.0;
  mdp::StationaryPolicy best_policy;
  std::size_t num_policies = 0;
  std::vector<double> per_policy_gains;  // filled on request
};

// Gain of a possibly multichain policy, averaged over the initial
// distribution: mu . P_inf . r.
double average_gain(const mdp::TabularMdp& mdp, const mdp::StationaryPolicy& policy);

// Evaluates all A^S deterministic policies. Throws TooLarge beyond
// kMaxEnumeratedPolicies.
EnumerationResult brute_force_gain(const mdp::TabularMdp& mdp, bool keep_gains = false);

// Arbitrary learner: action distribution given the whole history so far
// (seed pairs followed by played pairs, oldest first) and the 1-based step.
using HistoryPolicy =
    std::function<std::vector<double>(std::span<const game::Pair> history, std::size_t t)>;

// Stationary policy over pair-encoded states of the given order, as a
// history policy.
HistoryPolicy as_history_policy(const mdp::StationaryPolicy& policy, std::size_t order,
                                std::size_t num_learner_actions, std::size_t num_opponent_actions);

// Exhaustive enumeration of T-step interactions. The seed history has
// `history_length` pairs drawn uniformly, as in the simulator.
struct EnumerationSetup {
  const game::StageGame* stage = nullptr;
  const game::OpponentPolicy* psi = nullptr;
  HistoryPolicy policy;
  std::size_t horizon = 0;
  std::size_t history_length = 0;
};

// Expected total utility over the horizon.
double expected_value(const EnumerationSetup& setup);

// lambda(s) = sum_t P[S_t = s] for pair-encoded states of the given order.
std::vector<double> expected_occupancy(const EnumerationSetup& setup, std::size_t order);

// KL between the trajectory laws induced by psi (setup.psi) and psi_prime,
// from explicit trajectory probabilities.
double trajectory_kl(const EnumerationSetup& setup, const game::OpponentPolicy& psi_prime);

// Order-m stationary policy with pi'(a | o) = sum_t P(A_t = a, S_t = o) / sum_t P(S_t = o).
// States never visited get the uniform row.
mdp::StationaryPolicy reduce_policy_order(const EnumerationSetup& setup, std::size_t order);

struct BestResponse {
  mdp::StationaryPolicy policy;
  double g_star = 0.0;
  std::vector<double> h_star;
  double sp_h = 0.0;
};

// Optimal stationary play against psi, planned on the induced MDP at the
// opponent's own order.
BestResponse exact_best_response(const game::OpponentPolicy& psi, const game::StageGame& stage);

struct EpochBoundCheck {
  std::size_t observed = 0;
  double bound = 0.0;
  bool holds = false;
};

// bound = S A log2(8 T / (S A)); requires T >= S A.
EpochBoundCheck epoch_bound_check(std::size_t observed_epochs, std::size_t num_states,
                                  std::size_t num_actions, std::size_t horizon);

}  // namespace mrbear::oracles
