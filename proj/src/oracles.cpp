#include "mrbear/oracles.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "mrbear/errors.hpp"
#include "mrbear/planning.hpp"

namespace mrbear::oracles {

double average_gain(const mdp::TabularMdp& mdp, const mdp::StationaryPolicy& policy) {
  const mdp::SquareMatrix chain = mdp::induced_chain(mdp, policy);
  const auto n = static_cast<Eigen::Index>(chain.n);
  Eigen::MatrixXd lazy(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) lazy(i, j) = 0.5 * chain(i, j) + (i == j ? 0.5 : 0.0);
  // The lazy chain is aperiodic, so its powers converge to the Cesaro limit
  // of the original chain.
  // Rows are renormalised after every squaring; otherwise rounding in the
  // row sums compounds geometrically.
  for (int k = 0; k < 64; ++k) {
    Eigen::MatrixXd squared = lazy * lazy;
    for (Eigen::Index i = 0; i < n; ++i) squared.row(i) /= squared.row(i).sum();
    const double change = (squared - lazy).cwiseAbs().maxCoeff();
    lazy = std::move(squared);
    if (change < 1e-14) break;
  }
  const std::vector<double> reward = mdp::induced_reward(mdp, policy);
  const Eigen::Map<const Eigen::VectorXd> r(reward.data(), n);
  const Eigen::Map<const Eigen::VectorXd> mu(mdp.initial_dist().data(), n);
  return mu.dot(lazy * r);
}

EnumerationResult brute_force_gain(const mdp::TabularMdp& mdp, bool keep_gains) {
  const std::size_t n = mdp.num_states();
  const std::size_t na = mdp.num_actions();
  std::size_t count = 1;
  for (std::size_t s = 0; s < n; ++s) {
    if (count > kMaxEnumeratedPolicies / na) throw TooLarge("brute_force_gain: too many policies");
    count *= na;
  }
  std::vector<std::size_t> actions(n, 0);
  EnumerationResult result{-std::numeric_limits<double>::infinity(),
                           mdp::StationaryPolicy::uniform(n, na), count, {}};
  for (std::size_t index = 0; index < count; ++index) {
    std::size_t rest = index;
    for (std::size_t s = 0; s < n; ++s) {
      actions[s] = rest % na;
      rest /= na;
    }
    auto policy = mdp::StationaryPolicy::deterministic(na, actions);
    double gain = 0.0;
    try {
      gain = mdp::evaluate_policy(mdp, policy).gain;
    } catch (const NonUnichain&) {
      gain = average_gain(mdp, policy);
    }
    if (keep_gains) result.per_policy_gains.push_back(gain);
    if (gain > result.best_gain) {
      result.best_gain = gain;
      result.best_policy = std::move(policy);
    }
  }
  return result;
}

HistoryPolicy as_history_policy(const mdp::StationaryPolicy& policy, std::size_t order,
                                std::size_t num_learner_actions, std::size_t num_opponent_actions) {
  return [policy, order, num_learner_actions, num_opponent_actions](
             std::span<const game::Pair> history, std::size_t) {
    std::vector<game::Pair> newest_first(history.rbegin(), history.rbegin() + static_cast<long>(order));
    const std::size_t s = game::encode_pairs(newest_first, num_learner_actions, num_opponent_actions);
    const auto d = policy.dist(s);
    return std::vector<double>(d.begin(), d.end());
  };
}

namespace {

std::size_t context_of(const game::OpponentPolicy& psi, std::span<const game::Pair> history) {
  std::size_t context = 0;
  std::size_t weight = 1;
  const std::size_t base = psi.kind() == game::OpponentKind::General
                               ? psi.num_learner_actions() * psi.num_opponent_actions()
                               : psi.num_learner_actions();
  for (std::size_t j = 0; j < psi.order(); ++j) {
    const game::Pair& p = history[history.size() - 1 - j];
    const std::size_t digit = psi.kind() == game::OpponentKind::General
                                  ? game::pair_index(p.a, p.b, psi.num_opponent_actions())
                                  : p.a;
    context += digit * weight;
    weight *= base;
  }
  return context;
}

std::size_t state_of(std::span<const game::Pair> history, std::size_t order, std::size_t na,
                     std::size_t nb) {
  std::size_t state = 0;
  std::size_t weight = 1;
  for (std::size_t j = 0; j < order; ++j) {
    const game::Pair& p = history[history.size() - 1 - j];
    state += game::pair_index(p.a, p.b, nb) * weight;
    weight *= na * nb;
  }
  return state;
}

// Per-step callback of the enumeration: history before step t, the learner
// and opponent actions taken at t, and the probability of the whole prefix
// including step t.
struct Visitor {
  std::function<void(std::span<const game::Pair>, std::size_t, game::Pair, double)> on_step;
  std::function<void(std::span<const game::Pair>, double)> on_leaf;
};

void check_setup(const EnumerationSetup& setup) {
  if (setup.stage == nullptr || setup.psi == nullptr || !setup.policy) {
    throw InvalidArgument("enumeration: incomplete setup");
  }
  if (setup.history_length < setup.psi->order()) {
    throw InvalidArgument("enumeration: seed history shorter than the opponent's memory");
  }
  const double outcomes = static_cast<double>(setup.stage->num_learner_actions() *
                                              setup.stage->num_opponent_actions());
  const double leaves = std::pow(outcomes, static_cast<double>(setup.history_length + setup.horizon));
  if (leaves > static_cast<double>(kMaxEnumeratedTrajectories)) {
    throw TooLarge("enumeration: too many trajectories");
  }
}

void enumerate(const EnumerationSetup& setup, const game::OpponentPolicy& psi,
               const Visitor& visitor) {
  check_setup(setup);
  const std::size_t na = setup.stage->num_learner_actions();
  const std::size_t nb = setup.stage->num_opponent_actions();
  std::vector<game::Pair> history;
  history.reserve(setup.history_length + setup.horizon);

  std::function<void(std::size_t, double)> play = [&](std::size_t t, double prob) {
    if (t > setup.horizon) {
      if (visitor.on_leaf) visitor.on_leaf(history, prob);
      return;
    }
    const std::vector<double> pi = setup.policy(history, t);
    if (pi.size() != na) throw InvalidArgument("enumeration: policy returned a wrong-size row");
    const auto psi_row = psi.row(context_of(psi, history));
    for (std::size_t a = 0; a < na; ++a) {
      if (pi[a] <= 0.0) continue;
      for (std::size_t b = 0; b < nb; ++b) {
        const double p = prob * pi[a] * psi_row[b];
        if (p <= 0.0) continue;
        if (visitor.on_step) visitor.on_step(history, t, {a, b}, p);
        history.push_back({a, b});
        play(t + 1, p);
        history.pop_back();
      }
    }
  };

  std::function<void(std::size_t, double)> seed = [&](std::size_t filled, double prob) {
    if (filled == setup.history_length) {
      play(1, prob);
      return;
    }
    const double p = prob / static_cast<double>(na * nb);
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t b = 0; b < nb; ++b) {
        history.push_back({a, b});
        seed(filled + 1, p);
        history.pop_back();
      }
    }
  };
  seed(0, 1.0);
}

}  // namespace

double expected_value(const EnumerationSetup& setup) {
  double value = 0.0;
  Visitor v;
  v.on_step = [&](std::span<const game::Pair>, std::size_t, game::Pair p, double prob) {
    value += prob * setup.stage->utility(p.a, p.b);
  };
  enumerate(setup, *setup.psi, v);
  return value;
}

std::vector<double> expected_occupancy(const EnumerationSetup& setup, std::size_t order) {
  if (order > setup.history_length) throw OrderTooLarge("occupancy order exceeds the seed history");
  const std::size_t na = setup.stage->num_learner_actions();
  const std::size_t nb = setup.stage->num_opponent_actions();
  std::vector<double> lambda(game::state_count(na * nb, order), 0.0);
  Visitor v;
  v.on_step = [&](std::span<const game::Pair> history, std::size_t, game::Pair, double prob) {
    lambda[state_of(history, order, na, nb)] += prob;
  };
  enumerate(setup, *setup.psi, v);
  return lambda;
}

double trajectory_kl(const EnumerationSetup& setup, const game::OpponentPolicy& psi_prime) {
  if (psi_prime.order() > setup.history_length) {
    throw InvalidArgument("trajectory_kl: seed history shorter than psi_prime's memory");
  }
  const std::size_t na = setup.stage->num_learner_actions();
  const std::size_t nb = setup.stage->num_opponent_actions();
  const double seed_prob =
      std::pow(1.0 / static_cast<double>(na * nb), static_cast<double>(setup.history_length));
  double kl = 0.0;
  Visitor v;
  v.on_leaf = [&](std::span<const game::Pair> history, double prob) {
    // Probability of the same trajectory when the opponent plays psi_prime.
    double other = seed_prob;
    for (std::size_t t = 1; t <= setup.horizon; ++t) {
      const std::size_t idx = setup.history_length + t - 1;
      const auto prefix = history.first(idx);
      const game::Pair p = history[idx];
      other *= setup.policy(prefix, t)[p.a] * psi_prime.prob(context_of(psi_prime, prefix), p.b);
    }
    if (other <= 0.0) {
      kl = std::numeric_limits<double>::infinity();
      return;
    }
    kl += prob * std::log(prob / other);
  };
  enumerate(setup, *setup.psi, v);
  return kl;
}

mdp::StationaryPolicy reduce_policy_order(const EnumerationSetup& setup, std::size_t order) {
  if (order > setup.history_length) throw OrderTooLarge("reduction order exceeds the seed history");
  const std::size_t na = setup.stage->num_learner_actions();
  const std::size_t nb = setup.stage->num_opponent_actions();
  const std::size_t n = game::state_count(na * nb, order);
  std::vector<double> joint(n * na, 0.0);
  Visitor v;
  v.on_step = [&](std::span<const game::Pair> history, std::size_t, game::Pair p, double prob) {
    joint[state_of(history, order, na, nb) * na + p.a] += prob;
  };
  enumerate(setup, *setup.psi, v);
  std::vector<double> dist(n * na);
  for (std::size_t s = 0; s < n; ++s) {
    double total = 0.0;
    for (std::size_t a = 0; a < na; ++a) total += joint[s * na + a];
    for (std::size_t a = 0; a < na; ++a) {
      dist[s * na + a] = total > 0.0 ? joint[s * na + a] / total : 1.0 / static_cast<double>(na);
    }
  }
  return mdp::StationaryPolicy(n, na, std::move(dist));
}

BestResponse exact_best_response(const game::OpponentPolicy& psi, const game::StageGame& stage) {
  const mdp::TabularMdp model = game::induced_mdp(stage, psi, psi.order());
  auto solution = mdp::solve_optimal(model);
  BestResponse out{std::move(solution.policy), solution.gain_bias.gain,
                   std::move(solution.gain_bias.bias), 0.0};
  out.sp_h = mdp::span(out.h_star);
  return out;
}

EpochBoundCheck epoch_bound_check(std::size_t observed_epochs, std::size_t num_states,
                                  std::size_t num_actions, std::size_t horizon) {
  const double sa = static_cast<double>(num_states * num_actions);
  if (static_cast<double>(horizon) < sa) throw InvalidArgument("epoch_bound_check: need T >= S A");
  EpochBoundCheck out;
  out.observed = observed_epochs;
  out.bound = sa * std::log2(8.0 * static_cast<double>(horizon) / sa);
  out.holds = static_cast<double>(observed_epochs) <= out.bound;
  return out;
}

}  // namespace mrbear::oracles
