#include "mrbear/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mrbear/errors.hpp"
#include "mrbear/numeric.hpp"
#include "mrbear/planning.hpp"

namespace mrbear::learner {

GuaranteeSpec make_guarantee_spec(std::size_t class_order, std::size_t num_learner_actions,
                                  std::size_t num_opponent_actions, double universal_constant,
                                  double c_h, double reward_span) {
  if (!(universal_constant > 0.0) || !(c_h >= 0.0) || !(reward_span >= 0.0)) {
    throw InvalidArgument("guarantee spec: constants must be nonnegative");
  }
  const double states =
      static_cast<double>(game::state_count(num_learner_actions * num_opponent_actions, class_order));
  GuaranteeSpec spec;
  spec.class_order = class_order;
  spec.universal_constant = universal_constant;
  spec.c_h = c_h;
  spec.reward_span = reward_span;
  spec.coefficient = std::cbrt(universal_constant) *
                     std::sqrt((1.0 + c_h) * reward_span * states *
                               static_cast<double>(num_learner_actions));
  return spec;
}

double guarantee_B(const GuaranteeSpec& spec, double n, double delta) {
  if (!(n >= 1.0) || !(delta > 0.0 && delta < 1.0) || !(n / delta > 1.0)) {
    throw DomainError("guarantee_B: need N >= 1, 0 < delta < 1 and N / delta > 1");
  }
  return spec.coefficient * std::sqrt(n * std::log(n / delta));
}

LearnerState::LearnerState(const game::StageGame& stage, std::size_t order)
    : class_order(order),
      num_states(game::state_count(stage.num_learner_actions() * stage.num_opponent_actions(), order)),
      num_actions(stage.num_learner_actions()),
      num_opponent_actions(stage.num_opponent_actions()),
      visit_counts(num_states * num_actions, 0),
      epoch_start_counts(num_states * num_actions, 0),
      epoch_counts(num_states * num_actions, 0),
      psi_counts(num_states * num_opponent_actions, 0),
      policy(num_states, 0),
      evi_value(num_states, 0.0) {}

std::size_t LearnerState::state_observations(std::size_t s) const {
  std::size_t n = 0;
  for (std::size_t b = 0; b < num_opponent_actions; ++b) n += psi_counts[s * num_opponent_actions + b];
  return n;
}

void LearnerState::update_statistics(std::size_t s, std::size_t a, std::size_t b) {
  if (s >= num_states || a >= num_actions || b >= num_opponent_actions) {
    throw IndexOutOfRange("update_statistics: observation out of range");
  }
  ++visit_counts[s * num_actions + a];
  ++psi_counts[s * num_opponent_actions + b];
}

double psi_radius(std::size_t observations, std::size_t num_states,
                  std::size_t num_opponent_actions, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("confidence radius: delta must lie in (0, 1)");
  const double n = static_cast<double>(observations);
  const double log_term = static_cast<double>(num_opponent_actions) * std::log(2.0) +
                          std::log(2.0 * static_cast<double>(num_states) * (1.0 + n) / delta);
  return std::min(2.0, std::sqrt(2.0 * log_term / std::max(n, 1.0)));
}

ConfidenceRegion confidence_region(const LearnerState& state, double delta) {
  ConfidenceRegion region;
  region.num_states = state.num_states;
  region.num_opponent_actions = state.num_opponent_actions;
  region.psi_hat.assign(state.num_states * state.num_opponent_actions, 0.0);
  region.radii.assign(state.num_states, 2.0);
  const double uniform = 1.0 / static_cast<double>(state.num_opponent_actions);
  for (std::size_t s = 0; s < state.num_states; ++s) {
    const std::size_t n = state.state_observations(s);
    for (std::size_t b = 0; b < state.num_opponent_actions; ++b) {
      region.psi_hat[s * state.num_opponent_actions + b] =
          n == 0 ? uniform
                 : static_cast<double>(state.psi_counts[s * state.num_opponent_actions + b]) /
                       static_cast<double>(n);
    }
    region.radii[s] = psi_radius(n, state.num_states, state.num_opponent_actions, delta);
  }
  return region;
}

void optimistic_row(std::span<const double> p_hat, std::span<const double> values, double radius,
                    std::span<double> out) {
  const std::size_t k = p_hat.size();
  std::copy(p_hat.begin(), p_hat.end(), out.begin());
  if (k <= 1 || radius <= 0.0) return;
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return values[x] > values[y]; });
  const std::size_t best = order.front();
  out[best] = std::min(1.0, p_hat[best] + 0.5 * radius);
  double total = std::accumulate(out.begin(), out.end(), 0.0);
  for (std::size_t j = k - 1; j > 0 && total > 1.0; --j) {
    const std::size_t idx = order[j];
    const double removed = std::min(out[idx], total - 1.0);
    out[idx] -= removed;
    total -= removed;
  }
}

EviResult extended_value_iteration(const ConfidenceRegion& region, const game::StageGame& stage,
                                   std::size_t class_order, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("extended_value_iteration: epsilon must be positive");
  const std::size_t n = region.num_states;
  const std::size_t na = stage.num_learner_actions();
  const std::size_t nb = stage.num_opponent_actions();

  // Optimistic rewards do not depend on the value iterate.
  std::vector<double> reward(n * na);
  std::vector<std::size_t> successor(n * na * nb);
  for (std::size_t s = 0; s < n; ++s) {
    const std::span<const double> p_hat(region.psi_hat.data() + s * nb, nb);
    for (std::size_t a = 0; a < na; ++a) {
      double mean = 0.0;
      for (std::size_t b = 0; b < nb; ++b) {
        mean += p_hat[b] * stage.utility(a, b);
        successor[(s * na + a) * nb + b] = game::shift_state(s, class_order, {a, b}, na, nb);
      }
      reward[s * na + a] = std::min(1.0, mean + region.radii[s] * stage.max_utility(a));
    }
  }

  EviResult result;
  result.policy.assign(n, 0);
  std::vector<double> u(n, 0.0), next(n, 0.0), values(nb), row(nb);
  for (std::size_t iter = 1; iter <= mdp::kMaxIterations; ++iter) {
    for (std::size_t s = 0; s < n; ++s) {
      const std::span<const double> p_hat(region.psi_hat.data() + s * nb, nb);
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < na; ++a) {
        for (std::size_t b = 0; b < nb; ++b) values[b] = u[successor[(s * na + a) * nb + b]];
        optimistic_row(p_hat, values, region.radii[s], row);
        double expect = 0.0;
        for (std::size_t b = 0; b < nb; ++b) expect += row[b] * values[b];
        // Lazy (aperiodic) version of the optimistic Bellman operator.
        const double q = reward[s * na + a] + 0.5 * u[s] + 0.5 * expect;
        if (q > best + 1e-10) {
          best = q;
          result.policy[s] = a;
        }
      }
      next[s] = best;
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t s = 0; s < n; ++s) {
      lo = std::min(lo, next[s] - u[s]);
      hi = std::max(hi, next[s] - u[s]);
    }
    const double anchor = next[0];
    for (std::size_t s = 0; s < n; ++s) u[s] = next[s] - anchor;
    if (hi - lo < epsilon) {
      result.optimistic_gain = 0.5 * (lo + hi);
      result.value = std::move(u);
      result.iterations = iter;
      return result;
    }
  }
  throw NoConvergence("extended value iteration hit the iteration cap");
}

EpochResult run_epoch(LearnerState& state, game::GameEnv& env, double delta,
                      std::size_t step_budget, const StepObserver& observer) {
  if (step_budget == 0) throw InvalidArgument("run_epoch: step budget must be positive");
  if (!state.epoch_open) {
    const double epsilon = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(state.total_steps, 1)));
    const EviResult evi = extended_value_iteration(confidence_region(state, delta), env.stage(),
                                                   state.class_order, epsilon);
    state.policy = evi.policy;
    state.evi_value = evi.value;
    state.epoch_start_counts = state.visit_counts;
    std::fill(state.epoch_counts.begin(), state.epoch_counts.end(), 0);
    state.optimistic_gain_history.push_back({state.epoch_index, evi.optimistic_gain, 0});
    ++state.epoch_index;
    state.epoch_open = true;
  }

  EpochResult result;
  CompensatedSum reward;
  while (result.steps < step_budget) {
    const std::size_t s = env.state(state.class_order);
    const std::size_t a = state.policy[s];
    const game::StepOutcome out = env.step(a);
    state.update_statistics(s, a, out.opponent_action);
    ++state.total_steps;
    ++result.steps;
    reward.add(out.reward);
    result.reward_sum = reward.value();
    ++state.optimistic_gain_history.back().length;
    if (observer) observer({s, a, out.opponent_action, out.reward});
    const std::size_t pair = s * state.num_actions + a;
    if (++state.epoch_counts[pair] >= std::max<std::size_t>(1, state.epoch_start_counts[pair])) {
      state.epoch_open = false;
      result.completed = true;
      break;
    }
  }
  return result;
}

nlohmann::json to_json(const LearnerState& state) {
  nlohmann::json history = nlohmann::json::array();
  for (const GainRecord& g : state.optimistic_gain_history) {
    history.push_back({{"epoch", g.epoch}, {"gain", g.optimistic_gain}, {"length", g.length}});
  }
  return {{"version", kCheckpointVersion},
          {"class_order", state.class_order},
          {"visit_counts", state.visit_counts},
          {"epoch_start_counts", state.epoch_start_counts},
          {"epoch_counts", state.epoch_counts},
          {"psi_counts", state.psi_counts},
          {"policy", state.policy},
          {"evi_value", state.evi_value},
          {"total_steps", state.total_steps},
          {"epoch_index", state.epoch_index},
          {"epoch_open", state.epoch_open},
          {"optimistic_gain_history", std::move(history)}};
}

LearnerState learner_from_json(const nlohmann::json& doc, const game::StageGame& stage) {
  try {
    if (doc.at("version").get<int>() != kCheckpointVersion) {
      throw ParseError("learner checkpoint: unsupported version");
    }
    LearnerState state(stage, doc.at("class_order").get<std::size_t>());
    auto load = [&](const char* key, auto& field) {
      auto value = doc.at(key).get<std::remove_reference_t<decltype(field)>>();
      if (value.size() != field.size()) throw ParseError(std::string("learner checkpoint: bad size of ") + key);
      field = std::move(value);
    };
    load("visit_counts", state.visit_counts);
    load("epoch_start_counts", state.epoch_start_counts);
    load("epoch_counts", state.epoch_counts);
    load("psi_counts", state.psi_counts);
    load("policy", state.policy);
    load("evi_value", state.evi_value);
    state.total_steps = doc.at("total_steps").get<std::size_t>();
    state.epoch_index = doc.at("epoch_index").get<std::size_t>();
    state.epoch_open = doc.at("epoch_open").get<bool>();
    for (const auto& g : doc.at("optimistic_gain_history")) {
      state.optimistic_gain_history.push_back({g.at("epoch").get<std::size_t>(),
                                               g.at("gain").get<double>(),
                                               g.at("length").get<std::size_t>()});
    }
    return state;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("learner checkpoint: ") + e.what());
  }
}

}  // namespace mrbear::learner
