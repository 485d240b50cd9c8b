#include "mrbear/game.hpp"

#include <algorithm>
#include <cmath>

#include "mrbear/errors.hpp"

namespace mrbear::game {

namespace {

constexpr std::size_t kMaxTableStates = 10'000'000;

void check_row(std::span<const double> row, const char* what) {
  double total = 0.0;
  for (double x : row) {
    if (!(x >= 0.0)) throw InvalidArgument(std::string(what) + ": negative probability");
    total += x;
  }
  if (std::abs(total - 1.0) > mdp::kStochasticTol) {
    throw InvalidArgument(std::string(what) + ": row does not sum to 1");
  }
}

std::size_t ipow(std::size_t base, std::size_t exp) { return state_count(base, exp); }

}  // namespace

StageGame::StageGame(std::size_t num_learner_actions, std::size_t num_opponent_actions,
                     std::vector<double> utility)
    : num_learner_actions_(num_learner_actions),
      num_opponent_actions_(num_opponent_actions),
      utility_(std::move(utility)) {
  if (num_learner_actions_ == 0 || num_opponent_actions_ == 0) {
    throw InvalidArgument("stage game needs at least one action per player");
  }
  if (utility_.size() != num_learner_actions_ * num_opponent_actions_) {
    throw InvalidArgument("stage game utility has wrong size");
  }
  for (double u : utility_) {
    if (!(u >= 0.0 && u <= 1.0)) throw InvalidArgument("utility entries must lie in [0, 1]");
  }
}

double StageGame::max_utility(std::size_t a) const noexcept {
  double best = 0.0;
  for (std::size_t b = 0; b < num_opponent_actions_; ++b) best = std::max(best, utility(a, b));
  return best;
}

StageGame random_stage_game(std::size_t num_learner_actions, std::size_t num_opponent_actions,
                            std::uint64_t seed) {
  Rng rng = Rng::substream(seed, 0x5747);
  std::vector<double> u(num_learner_actions * num_opponent_actions);
  for (double& x : u) x = rng.uniform();
  return StageGame(num_learner_actions, num_opponent_actions, std::move(u));
}

std::size_t state_count(std::size_t base, std::size_t order) {
  std::size_t n = 1;
  for (std::size_t i = 0; i < order; ++i) {
    if (base != 0 && n > kMaxTableStates / base) throw TooLarge("history space too large");
    n *= base;
  }
  return n;
}

OpponentPolicy::OpponentPolicy(std::size_t order, OpponentKind kind,
                               std::size_t num_learner_actions, std::size_t num_opponent_actions,
                               std::vector<double> rows)
    : order_(order),
      kind_(kind),
      num_learner_actions_(num_learner_actions),
      num_opponent_actions_(num_opponent_actions),
      rows_(std::move(rows)) {
  if (num_learner_actions_ == 0 || num_opponent_actions_ == 0) {
    throw InvalidArgument("opponent needs nonempty action sets");
  }
  const std::size_t base = kind_ == OpponentKind::General
                               ? num_learner_actions_ * num_opponent_actions_
                               : num_learner_actions_;
  domain_size_ = state_count(base, order_);
  if (rows_.size() != domain_size_ * num_opponent_actions_) {
    throw InvalidArgument("opponent table does not cover its domain");
  }
  for (std::size_t c = 0; c < domain_size_; ++c) check_row(row(c), "opponent policy");
}

std::size_t OpponentPolicy::context_of_state(std::size_t state) const {
  if (kind_ == OpponentKind::General) return state % domain_size_;
  const std::size_t base = num_learner_actions_ * num_opponent_actions_;
  std::size_t context = 0;
  std::size_t weight = 1;
  for (std::size_t j = 0; j < order_; ++j) {
    const std::size_t digit = state % base;
    state /= base;
    context += (digit / num_opponent_actions_) * weight;
    weight *= num_learner_actions_;
  }
  return context;
}

std::size_t pair_index(std::size_t a, std::size_t b, std::size_t num_opponent_actions) noexcept {
  return a * num_opponent_actions + b;
}

std::size_t encode_pairs(std::span<const Pair> newest_first, std::size_t num_learner_actions,
                         std::size_t num_opponent_actions) {
  const std::size_t base = num_learner_actions * num_opponent_actions;
  std::size_t state = 0;
  std::size_t weight = 1;
  for (const Pair& p : newest_first) {
    if (p.a >= num_learner_actions || p.b >= num_opponent_actions) {
      throw IndexOutOfRange("encode_pairs: action out of range");
    }
    state += pair_index(p.a, p.b, num_opponent_actions) * weight;
    weight *= base;
  }
  return state;
}

std::vector<Pair> decode_state(std::size_t state, std::size_t order,
                               std::size_t num_learner_actions, std::size_t num_opponent_actions) {
  const std::size_t base = num_learner_actions * num_opponent_actions;
  if (state >= state_count(base, order)) throw IndexOutOfRange("decode_state: index too large");
  std::vector<Pair> out(order);
  for (std::size_t j = 0; j < order; ++j) {
    const std::size_t digit = state % base;
    state /= base;
    out[j] = {digit / num_opponent_actions, digit % num_opponent_actions};
  }
  return out;
}

std::size_t shift_state(std::size_t state, std::size_t order, Pair p,
                        std::size_t num_learner_actions,
                        std::size_t num_opponent_actions) noexcept {
  if (order == 0) return 0;
  const std::size_t base = num_learner_actions * num_opponent_actions;
  std::size_t keep = 1;
  for (std::size_t j = 1; j < order; ++j) keep *= base;
  return pair_index(p.a, p.b, num_opponent_actions) + base * (state % keep);
}

HistoryState::HistoryState(std::size_t capacity, std::size_t num_learner_actions,
                           std::size_t num_opponent_actions)
    : capacity_(capacity),
      num_learner_actions_(num_learner_actions),
      num_opponent_actions_(num_opponent_actions),
      ring_(std::max<std::size_t>(capacity, 1)) {}

void HistoryState::push(Pair p) {
  if (p.a >= num_learner_actions_ || p.b >= num_opponent_actions_) {
    throw IndexOutOfRange("history: action out of range");
  }
  ring_[head_] = p;
  head_ = (head_ + 1) % ring_.size();
  filled_ = std::min(filled_ + 1, capacity_);
}

Pair HistoryState::pair(std::size_t j) const {
  if (j >= filled_) throw IndexOutOfRange("history: pair not recorded");
  return ring_[(head_ + ring_.size() - 1 - j) % ring_.size()];
}

std::size_t HistoryState::encode(std::size_t order) const {
  if (order > capacity_) throw OrderTooLarge("history: order exceeds memory");
  if (order > filled_) throw OrderTooLarge("history: not enough interactions recorded");
  const std::size_t base = num_learner_actions_ * num_opponent_actions_;
  std::size_t state = 0;
  std::size_t weight = 1;
  for (std::size_t j = 0; j < order; ++j) {
    const Pair p = pair(j);
    state += pair_index(p.a, p.b, num_opponent_actions_) * weight;
    weight *= base;
  }
  return state;
}

std::size_t HistoryState::encode_learner_actions(std::size_t order) const {
  if (order > capacity_) throw OrderTooLarge("history: order exceeds memory");
  if (order > filled_) throw OrderTooLarge("history: not enough interactions recorded");
  std::size_t state = 0;
  std::size_t weight = 1;
  for (std::size_t j = 0; j < order; ++j) {
    state += pair(j).a * weight;
    weight *= num_learner_actions_;
  }
  return state;
}

GameEnv::GameEnv(StageGame stage, OpponentPolicy opponent, std::size_t memory,
                 std::uint64_t seed)
    : stage_(std::move(stage)),
      opponent_(std::move(opponent)),
      history_(std::max(memory, opponent_.order()), stage_.num_learner_actions(),
               stage_.num_opponent_actions()),
      rng_(Rng::substream(seed, 0xE2F1)) {
  if (opponent_.num_learner_actions() != stage_.num_learner_actions() ||
      opponent_.num_opponent_actions() != stage_.num_opponent_actions()) {
    throw InvalidArgument("opponent and stage game disagree on action sets");
  }
  for (std::size_t i = 0; i < history_.capacity(); ++i) {
    Pair p;
    p.a = rng_.below(stage_.num_learner_actions());
    p.b = rng_.below(stage_.num_opponent_actions());
    initial_history_.push_back(p);
    history_.push(p);
  }
}

std::size_t GameEnv::opponent_context() const {
  if (opponent_.kind() == OpponentKind::General) return history_.encode(opponent_.order());
  return history_.encode_learner_actions(opponent_.order());
}

StepOutcome GameEnv::step(std::size_t learner_action) {
  if (learner_action >= stage_.num_learner_actions()) {
    throw IndexOutOfRange("step: learner action out of range");
  }
  StepOutcome out;
  out.opponent_action = rng_.categorical(opponent_.row(opponent_context()));
  out.reward = stage_.utility(learner_action, out.opponent_action);
  history_.push({learner_action, out.opponent_action});
  ++step_count_;
  return out;
}

mdp::TabularMdp induced_mdp(const StageGame& stage, const OpponentPolicy& opponent,
                            std::size_t order) {
  if (order < opponent.order()) {
    throw OrderTooSmall("induced_mdp: order below the opponent's memory");
  }
  const std::size_t na = stage.num_learner_actions();
  const std::size_t nb = stage.num_opponent_actions();
  const std::size_t n = ipow(na * nb, order);
  if (n > kMaxInducedStates) throw TooLarge("induced_mdp: too many states");
  mdp::TabularMdp out(n, na);
  for (std::size_t s = 0; s < n; ++s) {
    const auto psi = opponent.row(opponent.context_of_state(s));
    for (std::size_t a = 0; a < na; ++a) {
      double reward = 0.0;
      for (std::size_t b = 0; b < nb; ++b) {
        reward += psi[b] * stage.utility(a, b);
        out.p(s, a, shift_state(s, order, {a, b}, na, nb)) += psi[b];
      }
      out.r(s, a) = std::min(1.0, reward);
    }
  }
  out.validate();
  return out;
}

mdp::TabularMdp learner_action_mdp(const StageGame& stage, const OpponentPolicy& opponent,
                                   std::size_t order) {
  if (opponent.kind() != OpponentKind::SelfOblivious) {
    throw InvalidArgument("learner_action_mdp: opponent is not self-oblivious");
  }
  if (order < opponent.order()) {
    throw OrderTooSmall("learner_action_mdp: order below the opponent's memory");
  }
  const std::size_t na = stage.num_learner_actions();
  const std::size_t nb = stage.num_opponent_actions();
  const std::size_t n = ipow(na, order);
  if (n > kMaxInducedStates) throw TooLarge("learner_action_mdp: too many states");
  const std::size_t keep = order == 0 ? 1 : n / na;
  mdp::TabularMdp out(n, na);
  for (std::size_t s = 0; s < n; ++s) {
    const auto psi = opponent.row(s % opponent.domain_size());
    for (std::size_t a = 0; a < na; ++a) {
      double reward = 0.0;
      for (std::size_t b = 0; b < nb; ++b) reward += psi[b] * stage.utility(a, b);
      out.r(s, a) = std::min(1.0, reward);
      out.p(s, a, order == 0 ? 0 : a + na * (s % keep)) = 1.0;
    }
  }
  out.validate();
  return out;
}

OpponentPolicy random_opponent(std::size_t num_learner_actions, std::size_t num_opponent_actions,
                               std::size_t order, OpponentKind kind, std::uint64_t seed,
                               double mixing_floor) {
  if (!(mixing_floor >= 0.0 && mixing_floor <= 1.0)) {
    throw InvalidArgument("random_opponent: mixing_floor must lie in [0, 1]");
  }
  const std::size_t base =
      kind == OpponentKind::General ? num_learner_actions * num_opponent_actions
                                    : num_learner_actions;
  const std::size_t domain = state_count(base, order);
  Rng rng = Rng::substream(seed, 0x0990);
  std::vector<double> rows;
  rows.reserve(domain * num_opponent_actions);
  const double uniform = 1.0 / static_cast<double>(num_opponent_actions);
  for (std::size_t c = 0; c < domain; ++c) {
    const std::vector<double> draw = rng.dirichlet_flat(num_opponent_actions);
    double total = 0.0;
    const std::size_t start = rows.size();
    for (double x : draw) {
      rows.push_back((1.0 - mixing_floor) * x + mixing_floor * uniform);
      total += rows.back();
    }
    for (std::size_t b = 0; b < num_opponent_actions; ++b) rows[start + b] /= total;
  }
  return OpponentPolicy(order, kind, num_learner_actions, num_opponent_actions, std::move(rows));
}

}  // namespace mrbear::game
