#include "mrbear/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mrbear/errors.hpp"
#include "mrbear/rng.hpp"

namespace mrbear::mdp {

namespace {

void check_distribution(std::span<const double> dist, const std::string& what) {
  double total = 0.0;
  for (double p : dist) {
    if (!(p >= 0.0)) throw InvalidArgument(what + " has a negative or NaN entry");
    total += p;
  }
  if (std::abs(total - 1.0) > kStochasticTol) {
    throw InvalidArgument(what + " sums to " + std::to_string(total));
  }
}

}  // namespace

TabularMdp::TabularMdp(std::size_t num_states, std::size_t num_actions,
                       std::vector<double> transitions, std::vector<double> rewards,
                       std::vector<double> initial_dist)
    : num_states_(num_states),
      num_actions_(num_actions),
      transitions_(std::move(transitions)),
      rewards_(std::move(rewards)),
      initial_dist_(std::move(initial_dist)) {
  validate();
}

TabularMdp::TabularMdp(std::size_t num_states, std::size_t num_actions)
    : num_states_(num_states),
      num_actions_(num_actions),
      transitions_(num_states * num_actions * num_states, 0.0),
      rewards_(num_states * num_actions, 0.0),
      initial_dist_(num_states, num_states ? 1.0 / static_cast<double>(num_states) : 0.0) {
  if (num_states == 0 || num_actions == 0) {
    throw InvalidArgument("MDP needs at least one state and one action");
  }
}

void TabularMdp::validate() const {
  if (num_states_ == 0 || num_actions_ == 0) {
    throw InvalidArgument("MDP needs at least one state and one action");
  }
  if (transitions_.size() != num_states_ * num_actions_ * num_states_) {
    throw InvalidArgument("transition tensor has wrong size");
  }
  if (rewards_.size() != num_states_ * num_actions_) {
    throw InvalidArgument("reward table has wrong size");
  }
  if (initial_dist_.size() != num_states_) {
    throw InvalidArgument("initial distribution has wrong size");
  }
  for (std::size_t s = 0; s < num_states_; ++s) {
    for (std::size_t a = 0; a < num_actions_; ++a) {
      check_distribution(row(s, a), "P(.|" + std::to_string(s) + "," + std::to_string(a) + ")");
      const double reward = r(s, a);
      if (!(reward >= 0.0 && reward <= 1.0)) {
        throw InvalidArgument("reward outside [0,1] at (" + std::to_string(s) + "," +
                              std::to_string(a) + ")");
      }
    }
  }
  check_distribution(initial_dist_, "initial distribution");
}

StationaryPolicy::StationaryPolicy(std::size_t num_states, std::size_t num_actions,
                                   std::vector<double> action_dist)
    : num_states_(num_states),
      num_actions_(num_actions),
      action_dist_(std::move(action_dist)),
      deterministic_(true) {
  if (action_dist_.size() != num_states_ * num_actions_) {
    throw InvalidArgument("policy table has wrong size");
  }
  for (std::size_t s = 0; s < num_states_; ++s) {
    check_distribution(dist(s), "policy row " + std::to_string(s));
    for (double p : dist(s)) {
      if (p != 0.0 && p != 1.0) deterministic_ = false;
    }
  }
}

StationaryPolicy StationaryPolicy::deterministic(std::size_t num_actions,
                                                 std::span<const std::size_t> actions) {
  std::vector<double> table(actions.size() * num_actions, 0.0);
  for (std::size_t s = 0; s < actions.size(); ++s) {
    if (actions[s] >= num_actions) throw InvalidArgument("action index out of range");
    table[s * num_actions + actions[s]] = 1.0;
  }
  return StationaryPolicy(actions.size(), num_actions, std::move(table));
}

StationaryPolicy StationaryPolicy::uniform(std::size_t num_states, std::size_t num_actions) {
  return StationaryPolicy(num_states, num_actions,
                          std::vector<double>(num_states * num_actions,
                                              1.0 / static_cast<double>(num_actions)));
}

std::size_t StationaryPolicy::action(std::size_t s) const noexcept {
  const auto d = dist(s);
  return static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin());
}

SquareMatrix induced_chain(const TabularMdp& mdp, const StationaryPolicy& policy) {
  const std::size_t n = mdp.num_states();
  if (policy.num_states() != n || policy.num_actions() != mdp.num_actions()) {
    throw InvalidArgument("policy does not match MDP dimensions");
  }
  SquareMatrix chain(n);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      const double w = policy.prob(s, a);
      if (w == 0.0) continue;
      const auto row = mdp.row(s, a);
      for (std::size_t next = 0; next < n; ++next) chain(s, next) += w * row[next];
    }
  }
  return chain;
}

std::vector<double> induced_reward(const TabularMdp& mdp, const StationaryPolicy& policy) {
  std::vector<double> reward(mdp.num_states(), 0.0);
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      reward[s] += policy.prob(s, a) * mdp.r(s, a);
    }
  }
  return reward;
}

TabularMdp random_ergodic_mdp(std::size_t num_states, std::size_t num_actions,
                              std::uint64_t seed) {
  Rng rng(seed);
  TabularMdp mdp(num_states, num_actions);
  for (std::size_t s = 0; s < num_states; ++s) {
    for (std::size_t a = 0; a < num_actions; ++a) {
      const auto row = rng.dirichlet_flat(num_states);
      for (std::size_t next = 0; next < num_states; ++next) mdp.p(s, a, next) = row[next];
      mdp.r(s, a) = rng.uniform();
    }
  }
  mdp.validate();
  return mdp;
}

TabularMdp random_weakly_communicating_mdp(std::size_t num_states,
                                           std::size_t num_actions,
                                           std::size_t num_transient,
                                           std::uint64_t seed) {
  if (num_transient >= num_states) {
    throw InvalidArgument("need at least one recurrent state");
  }
  Rng rng(seed);
  const std::size_t core = num_states - num_transient;
  TabularMdp mdp(num_states, num_actions);
  for (std::size_t s = 0; s < num_states; ++s) {
    for (std::size_t a = 0; a < num_actions; ++a) {
      // Sparse random row supported on the core only, so states outside the
      // core are never entered.
      std::vector<double> row(num_states, 0.0);
      const std::size_t support = 1 + rng.below(std::min<std::size_t>(3, core));
      double total = 0.0;
      for (std::size_t k = 0; k < support; ++k) {
        const double w = rng.uniform() + 0.05;
        row[rng.below(core)] += w;
        total += w;
      }
      double scale = 1.0;
      if (a == 0 && s < core) {
        // Action 0 advances along a cycle through the core with probability
        // 0.3, which keeps the core communicating.
        scale = 0.7;
        mdp.p(s, a, (s + 1) % core) += 0.3;
      }
      for (std::size_t next = 0; next < num_states; ++next) {
        mdp.p(s, a, next) += scale * row[next] / total;
      }
      mdp.r(s, a) = rng.uniform();
    }
  }
  for (std::size_t s = 0; s < num_states; ++s) {
    for (std::size_t a = 0; a < num_actions; ++a) {
      double total = 0.0;
      for (std::size_t next = 0; next < num_states; ++next) total += mdp.p(s, a, next);
      for (std::size_t next = 0; next < num_states; ++next) mdp.p(s, a, next) /= total;
    }
  }
  mdp.validate();
  return mdp;
}

StationaryPolicy random_policy(std::size_t num_states, std::size_t num_actions,
                               std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> table;
  table.reserve(num_states * num_actions);
  for (std::size_t s = 0; s < num_states; ++s) {
    const auto row = rng.dirichlet_flat(num_actions);
    table.insert(table.end(), row.begin(), row.end());
  }
  return StationaryPolicy(num_states, num_actions, std::move(table));
}

}  // namespace mrbear::mdp
