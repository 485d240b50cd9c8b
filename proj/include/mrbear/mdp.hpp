#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace mrbear::mdp {

inline constexpr double kStochasticTol = 1e-12;

// Finite average-reward MDP with dense transition tensor P[s][a][s'] stored
// row-major, rewards r[s][a] in [0, 1] and initial distribution mu.
class TabularMdp {
 public:
  TabularMdp(std::size_t num_states, std::size_t num_actions,
             std::vector<double> transitions, std::vector<double> rewards,
             std::vector<double> initial_dist);

  // Uniform initial distribution, everything else zero. Fill through the
  // mutable accessors and call validate() before use.
  TabularMdp(std::size_t num_states, std::size_t num_actions);

  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_actions() const noexcept { return num_actions_; }

  double p(std::size_t s, std::size_t a, std::size_t next) const noexcept {
    return transitions_[(s * num_actions_ + a) * num_states_ + next];
  }
  double& p(std::size_t s, std::size_t a, std::size_t next) noexcept {
    return transitions_[(s * num_actions_ + a) * num_states_ + next];
  }
  std::span<const double> row(std::size_t s, std::size_t a) const noexcept {
    return {transitions_.data() + (s * num_actions_ + a) * num_states_,
            num_states_};
  }
  double r(std::size_t s, std::size_t a) const noexcept {
    return rewards_[s * num_actions_ + a];
  }
  double& r(std::size_t s, std::size_t a) noexcept {
    return rewards_[s * num_actions_ + a];
  }

  const std::vector<double>& transitions() const noexcept { return transitions_; }
  const std::vector<double>& rewards() const noexcept { return rewards_; }
  const std::vector<double>& initial_dist() const noexcept { return initial_dist_; }
  std::vector<double>& initial_dist() noexcept { return initial_dist_; }

  // Throws InvalidArgument if any stochasticity or range invariant fails.
  void validate() const;

 private:
  std::size_t num_states_;
  std::size_t num_actions_;
  std::vector<double> transitions_;
  std::vector<double> rewards_;
  std::vector<double> initial_dist_;
};

// Memoryless policy: per-state distribution over actions.
class StationaryPolicy {
 public:
  StationaryPolicy(std::size_t num_states, std::size_t num_actions,
                   std::vector<double> action_dist);

  static StationaryPolicy deterministic(std::size_t num_actions,
                                        std::span<const std::size_t> actions);
  static StationaryPolicy uniform(std::size_t num_states, std::size_t num_actions);

  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_actions() const noexcept { return num_actions_; }
  bool is_deterministic() const noexcept { return deterministic_; }

  double prob(std::size_t s, std::size_t a) const noexcept {
    return action_dist_[s * num_actions_ + a];
  }
  std::span<const double> dist(std::size_t s) const noexcept {
    return {action_dist_.data() + s * num_actions_, num_actions_};
  }
  // Most likely action in s (lowest index on ties).
  std::size_t action(std::size_t s) const noexcept;

  const std::vector<double>& action_dist() const noexcept { return action_dist_; }

  friend bool operator==(const StationaryPolicy&, const StationaryPolicy&) = default;

 private:
  std::size_t num_states_;
  std::size_t num_actions_;
  std::vector<double> action_dist_;
  bool deterministic_;
};

struct GainBias {
  double gain = 0.0;
  std::vector<double> bias;
  double residual = 0.0;
  std::size_t normalization = 0;
};

struct ChainStats {
  std::vector<double> stationary_dist;
  double kemeny_index = 0.0;
  double ergodicity_coeff = 0.0;
  std::optional<double> diameter;
};

// Row-major square matrix used for Markov chains.
struct SquareMatrix {
  std::size_t n = 0;
  std::vector<double> data;

  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t size) : n(size), data(size * size, 0.0) {}

  double operator()(std::size_t i, std::size_t j) const noexcept { return data[i * n + j]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data[i * n + j]; }
};

// Transition matrix and reward vector of the chain induced by a policy.
SquareMatrix induced_chain(const TabularMdp& mdp, const StationaryPolicy& policy);
std::vector<double> induced_reward(const TabularMdp& mdp, const StationaryPolicy& policy);

// Random MDP whose every transition row has full support (hence ergodic
// under every policy).
TabularMdp random_ergodic_mdp(std::size_t num_states, std::size_t num_actions,
                              std::uint64_t seed);

// Random weakly communicating MDP: a communicating core of
// num_states - num_transient states joined by a cycle action, sparse random
// rows elsewhere, plus states that no transition ever enters.
TabularMdp random_weakly_communicating_mdp(std::size_t num_states,
                                           std::size_t num_actions,
                                           std::size_t num_transient,
                                           std::uint64_t seed);

StationaryPolicy random_policy(std::size_t num_states, std::size_t num_actions,
                               std::uint64_t seed);

}  // namespace mrbear::mdp
