#include "mrbear/selector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mrbear/errors.hpp"
#include "mrbear/numeric.hpp"

namespace mrbear::selector {

namespace {

double bound_of(const ClassRecord& record, std::size_t steps, double delta) {
  return learner::guarantee_B(record.spec, static_cast<double>(steps), delta);
}

ClassSummary summarize(const ClassRecord& record) {
  ClassSummary out;
  out.class_order = record.class_order;
  out.coefficient = record.spec.coefficient;
  out.steps = record.steps;
  out.reward_sum = record.reward_sum;
  out.active = record.active;
  out.eliminated_at = record.eliminated_at;
  out.learner_epochs = record.learner.epoch_index;
  return out;
}

}  // namespace

std::size_t warmup_length(double c_h) {
  const double c5 = std::pow(c_h, 5.0);
  if (!(c5 < 1e12)) throw InvalidArgument("c_h too large for a warm-up phase");
  return std::max<std::size_t>(static_cast<std::size_t>(std::ceil(c5)), 9);
}

double balance_alpha(double c_h) {
  const double w = std::max(std::pow(c_h, 5.0), 9.0);
  return (std::log(w) + 1.0) / (2.0 * std::log(w));
}

SelectorConfig derive_constants(std::size_t num_classes, std::size_t horizon, double delta,
                                double c_h, std::span<const learner::GuaranteeSpec> specs) {
  if (num_classes == 0) throw InvalidArgument("need at least one model class");
  if (specs.size() != num_classes) throw InvalidArgument("one guarantee spec per class required");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
  if (!(c_h >= 0.0)) throw InvalidArgument("c_h must be nonnegative");
  SelectorConfig config;
  config.num_classes = num_classes;
  config.horizon = horizon;
  config.delta = delta;
  config.c_h = c_h;
  config.warmup_steps = warmup_length(c_h);
  config.alpha = balance_alpha(c_h);
  const auto w = static_cast<double>(config.warmup_steps);
  config.beta = learner::guarantee_B(specs.back(), w, delta) - learner::guarantee_B(specs.front(), w, delta);
  if (horizon < num_classes * config.warmup_steps) {
    throw HorizonTooSmall("horizon T is shorter than the warm-up phase M * max(c_h^5, 9)");
  }
  return config;
}

ClassRecord::ClassRecord(const game::StageGame& stage, learner::GuaranteeSpec guarantee)
    : class_order(guarantee.class_order), learner(stage, guarantee.class_order), spec(guarantee) {}

TestOutcome misspecification_test(std::span<const ClassRecord> records, std::size_t i,
                                  const SelectorConfig& config) {
  const ClassRecord& own = records[i];
  const double n_i = static_cast<double>(own.steps);
  const double optimistic = (bound_of(own, own.steps, config.delta) + own.reward_sum) / n_i;
  double pessimistic = -std::numeric_limits<double>::infinity();
  for (std::size_t j = i; j < records.size(); ++j) {
    if (records[j].steps == 0) continue;
    pessimistic = std::max(pessimistic, (records[j].reward_sum - 2.0 * config.c_h) /
                                            static_cast<double>(records[j].steps));
  }
  return optimistic < pessimistic ? TestOutcome::Eliminate : TestOutcome::Keep;
}

std::size_t select_class(std::span<const ClassRecord> records, const SelectorConfig& config) {
  std::optional<std::size_t> best;
  double best_bound = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].active) continue;
    const double b = bound_of(records[i], records[i].steps, config.delta);
    if (!best || b < best_bound) {
      best = i;
      best_bound = b;
    }
  }
  if (!best) throw AllEliminated("every model class failed the misspecification test");
  return *best;
}

std::vector<BalanceCheck> check_balance(std::span<const ClassRecord> records,
                                        std::span<const std::size_t> previous_steps,
                                        const SelectorConfig& config, double delta) {
  std::vector<BalanceCheck> out;
  const double alpha = config.alpha;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].active) continue;
    for (std::size_t j = 0; j < records.size(); ++j) {
      if (j == i || !records[j].active) continue;
      const double b_i = bound_of(records[i], records[i].steps, delta);
      const double b_j = bound_of(records[j], records[j].steps, delta);
      const double b_i_prev = bound_of(records[i], previous_steps[i], delta);
      const double rhs1 = b_j + alpha * b_i_prev + config.beta;
      out.push_back({i, j, 1, b_i, rhs1, b_i <= rhs1 * (1.0 + 1e-12)});

      const double n_j = static_cast<double>(records[j].steps);
      const double log_j = std::log(n_j / delta);
      const double c_i = records[i].spec.coefficient;
      const double c_j = records[j].spec.coefficient;
      const double root = c_j / ((1.0 - alpha) * c_i) +
                          config.beta / ((1.0 - alpha) * c_i * std::sqrt(n_j * log_j));
      const double ratio = static_cast<double>(records[i].steps) / n_j;
      const double rhs2 = root * root * log_j;
      out.push_back({i, j, 2, ratio, rhs2, ratio <= rhs2 * (1.0 + 1e-12)});
    }
  }
  return out;
}

bool same_interaction(const StepRecord& x, const StepRecord& y) noexcept {
  return x.t == y.t && x.state == y.state && x.cls == y.cls && x.action == y.action &&
         x.opponent_action == y.opponent_action && x.reward == y.reward;
}

namespace {

learner::StepObserver make_observer(RunTrace& trace, CompensatedSum& total,
                                    const RunOptions& options, std::size_t& elapsed,
                                    const std::size_t& epoch, std::size_t cls) {
  return [&trace, &total, &options, &elapsed, &epoch, cls](const learner::StepInfo& info) {
    ++elapsed;
    total.add(info.reward);
    trace.total_reward = total.value();
    if (!options.record_steps) return;
    trace.steps.push_back({static_cast<std::uint32_t>(elapsed), static_cast<std::uint32_t>(epoch),
                           static_cast<std::uint32_t>(info.state), static_cast<std::uint8_t>(cls),
                           static_cast<std::uint8_t>(info.action),
                           static_cast<std::uint8_t>(info.opponent_action), info.reward});
  };
}

void check_trace_limits(const game::GameEnv& env, std::size_t horizon) {
  if (horizon > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidArgument("horizon exceeds the trace format's 32-bit step index");
  }
  if (env.stage().num_learner_actions() > 256 || env.stage().num_opponent_actions() > 256) {
    throw InvalidArgument("trace format supports at most 256 actions per player");
  }
}

}  // namespace

RunTrace run_mrbear(const SelectorConfig& config, game::GameEnv& env,
                    std::span<const learner::GuaranteeSpec> specs, const RunOptions& options) {
  if (specs.size() != config.num_classes) throw InvalidArgument("one guarantee spec per class required");
  if (config.horizon < config.num_classes * config.warmup_steps) {
    throw HorizonTooSmall("horizon T is shorter than the warm-up phase");
  }
  if (env.memory() + 1 < config.num_classes) {
    throw InvalidArgument("environment memory is shorter than the largest class order");
  }
  check_trace_limits(env, config.horizon);

  RunTrace trace;
  trace.horizon = config.horizon;
  trace.initial_history = env.initial_history();
  if (options.record_steps) trace.steps.reserve(config.horizon);

  std::vector<ClassRecord> records;
  records.reserve(config.num_classes);
  for (std::size_t i = 0; i < config.num_classes; ++i) {
    if (specs[i].class_order != i) throw InvalidArgument("class i must have order i");
    records.emplace_back(env.stage(), specs[i]);
  }

  std::size_t elapsed = 0;
  std::size_t epoch = 0;
  CompensatedSum total;

  for (std::size_t i = 0; i < config.num_classes; ++i) {
    const auto observer = make_observer(trace, total, options, elapsed, epoch, i);
    std::size_t remaining = config.warmup_steps;
    while (remaining > 0) {
      const auto res = learner::run_epoch(records[i].learner, env, config.delta, remaining, observer);
      remaining -= res.steps;
      records[i].steps += res.steps;
      records[i].reward_sum += res.reward_sum;
    }
    trace.epochs.push_back({0, i, config.warmup_steps, std::vector<bool>(config.num_classes, true), {}});
  }

  std::vector<std::size_t> previous(config.num_classes);
  for (epoch = 1;; ++epoch) {
    EpochRecord record;
    record.k = epoch;
    std::vector<std::size_t> failing;
    for (std::size_t i = 0; i < config.num_classes; ++i) {
      if (records[i].active && misspecification_test(records, i, config) == TestOutcome::Eliminate) {
        failing.push_back(i);
      }
    }
    for (std::size_t i : failing) {
      records[i].active = false;
      records[i].eliminated_at = epoch;
    }
    record.eliminated = failing;
    if (elapsed >= config.horizon) break;

    const std::size_t chosen = select_class(records, config);
    for (std::size_t i = 0; i < config.num_classes; ++i) previous[i] = records[i].steps;
    const auto observer = make_observer(trace, total, options, elapsed, epoch, chosen);
    const auto res = learner::run_epoch(records[chosen].learner, env, config.delta,
                                        config.horizon - elapsed, observer);
    records[chosen].steps += res.steps;
    records[chosen].reward_sum += res.reward_sum;

    record.cls = chosen;
    record.length = res.steps;
    record.active.resize(config.num_classes);
    for (std::size_t i = 0; i < config.num_classes; ++i) record.active[i] = records[i].active;
    trace.epochs.push_back(std::move(record));

    if (options.check_balance) {
      for (const BalanceCheck& c : check_balance(records, previous, config, config.delta)) {
        ++trace.balance_checks;
        if (!c.holds) trace.balance_failures.push_back(c);
      }
    }
  }

  for (const ClassRecord& r : records) trace.classes.push_back(summarize(r));
  return trace;
}

RunTrace run_single_class(game::GameEnv& env, std::size_t class_order, std::size_t horizon,
                          double delta, const RunOptions& options) {
  if (horizon == 0) throw InvalidArgument("horizon must be positive");
  if (env.memory() < class_order) {
    throw InvalidArgument("environment memory is shorter than the class order");
  }
  check_trace_limits(env, horizon);
  RunTrace trace;
  trace.horizon = horizon;
  trace.initial_history = env.initial_history();
  if (options.record_steps) trace.steps.reserve(horizon);

  learner::LearnerState state(env.stage(), class_order);
  std::size_t elapsed = 0;
  std::size_t epoch = 0;
  CompensatedSum total;
  double reward_sum = 0.0;
  while (elapsed < horizon) {
    ++epoch;
    const auto observer = make_observer(trace, total, options, elapsed, epoch, class_order);
    const auto res = learner::run_epoch(state, env, delta, horizon - elapsed, observer);
    reward_sum += res.reward_sum;
    trace.epochs.push_back({epoch, class_order, res.steps, {true}, {}});
  }
  ClassSummary summary;
  summary.class_order = class_order;
  summary.steps = elapsed;
  summary.reward_sum = reward_sum;
  summary.learner_epochs = state.epoch_index;
  trace.classes.push_back(summary);
  return trace;
}

Regret compute_regret(const RunTrace& trace, double g_star) {
  Regret out;
  out.total = static_cast<double>(trace.horizon) * g_star - trace.total_reward;
  for (const ClassSummary& c : trace.classes) {
    out.per_class.push_back(static_cast<double>(c.steps) * g_star - c.reward_sum);
  }
  return out;
}

double failure_probability_bound(std::size_t num_classes, std::size_t horizon, double delta) {
  return std::min(1.0, 26.0 * static_cast<double>(num_classes) * static_cast<double>(horizon) * delta);
}

}  // namespace mrbear::selector
