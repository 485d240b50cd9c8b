#include "mrbear/adversarial.hpp"

#include <cmath>
#include <limits>

#include "mrbear/errors.hpp"

namespace mrbear::adversarial {

namespace {

// Fredricksen-Kessler-Maiorana: concatenate, in lexicographic order, the
// Lyndon words whose length divides n.
void fkm(std::size_t t, std::size_t p, std::size_t k, std::size_t n, std::vector<std::size_t>& a,
         std::vector<std::size_t>& out) {
  if (t > n) {
    if (n % p == 0) out.insert(out.end(), a.begin() + 1, a.begin() + 1 + static_cast<long>(p));
    return;
  }
  a[t] = a[t - p];
  fkm(t + 1, p, k, n, a, out);
  for (std::size_t j = a[t - p] + 1; j < k; ++j) {
    a[t] = j;
    fkm(t + 1, t, k, n, a, out);
  }
}

bool is_clean(const game::Pair& p, std::size_t a_star, std::size_t b_star) {
  return p.a != a_star && p.b < b_star;
}

game::OpponentPolicy make_psi(std::size_t na, std::size_t nb, std::size_t m, double epsilon,
                              std::size_t s_prime, bool perturb) {
  const std::size_t a_star = na - 1;
  const std::size_t b_star = nb - 2;
  const std::size_t b_repeat = nb - 1;
  const DeBruijnSeq seq = de_bruijn(nb - 2, m - 1);
  const std::size_t contexts = game::state_count(na * nb, m);
  const std::size_t window_states = game::state_count(na * nb, m - 1);

  std::vector<double> rows(contexts * nb, 0.0);
  std::vector<std::size_t> window_symbols(m - 1);
  for (std::size_t s = 0; s < contexts; ++s) {
    const auto pairs = game::decode_state(s, m, na, nb);  // pairs[0] is the newest
    const game::Pair oldest = pairs[m - 1];
    double* row = rows.data() + s * nb;

    bool clean = true;
    for (std::size_t j = 0; j + 1 < m; ++j) clean = clean && is_clean(pairs[j], a_star, b_star);
    if (!clean) {
      // Replaying the oldest action brings the window back after m - 1
      // steps. Special actions are never replayed: that would let the
      // learner collect b* outside the clean windows.
      row[oldest.b < b_star ? oldest.b : 0] = 1.0;
      continue;
    }

    const std::size_t window = s % window_states;
    double bias = window == 0 ? epsilon : 0.0;
    if (perturb && window == s_prime) bias = 2.0 * epsilon;
    row[b_star] = 0.5 + bias;
    if (oldest.a == a_star) {
      row[b_repeat] = 0.5 - bias;
    } else {
      for (std::size_t j = 0; j + 1 < m; ++j) window_symbols[j] = pairs[m - 2 - j].b;
      row[db_successor(seq, window_symbols)] += 0.5 - bias;
    }
  }
  return game::OpponentPolicy(m, game::OpponentKind::General, na, nb, std::move(rows));
}

game::StageGame make_stage(std::size_t na, std::size_t nb) {
  std::vector<double> u(na * nb, 0.0);
  u[(na - 1) * nb + (nb - 2)] = 1.0;
  return game::StageGame(na, nb, std::move(u));
}

void check_params(std::size_t na, std::size_t nb, std::size_t m, double epsilon) {
  if (na < 2) throw InvalidParams("lower bound: need A >= 2");
  if (nb < 3) throw InvalidParams("lower bound: need B >= 3");
  if (m < 2) throw InvalidParams("lower bound: need m >= 2");
  if (!(epsilon > 0.0 && epsilon < 0.25)) throw InvalidParams("lower bound: epsilon must lie in (0, 1/4)");
}

}  // namespace

DeBruijnSeq de_bruijn(std::size_t alphabet_size, std::size_t order) {
  if (alphabet_size == 0) throw InvalidArgument("de_bruijn: empty alphabet");
  std::size_t length = 1;
  for (std::size_t i = 0; i < order; ++i) {
    if (length > kMaxDeBruijnLength / alphabet_size) throw TooLarge("de_bruijn: sequence too long");
    length *= alphabet_size;
  }
  DeBruijnSeq seq;
  seq.alphabet_size = alphabet_size;
  seq.order = order;
  if (order == 0 || alphabet_size == 1) {
    seq.symbols.assign(1, 0);
    return seq;
  }
  std::vector<std::size_t> a(alphabet_size * order + 1, 0);
  seq.symbols.reserve(length);
  fkm(1, 1, alphabet_size, order, a, seq.symbols);
  return seq;
}

std::size_t db_successor(const DeBruijnSeq& seq, std::span<const std::size_t> window) {
  if (window.size() != seq.order) throw InvalidArgument("db_successor: window has wrong length");
  for (std::size_t x : window) {
    if (x >= seq.alphabet_size) throw InvalidArgument("db_successor: symbol outside the alphabet");
  }
  const std::size_t len = seq.symbols.size();
  for (std::size_t start = 0; start < len; ++start) {
    bool match = true;
    for (std::size_t j = 0; j < window.size() && match; ++j) {
      match = seq.symbols[(start + j) % len] == window[j];
    }
    if (match) return seq.symbols[(start + window.size()) % len];
  }
  throw InvalidArgument("db_successor: window does not occur in the sequence");
}

LowerBoundInstance build_lower_bound_instance(std::size_t num_learner_actions,
                                              std::size_t num_opponent_actions, std::size_t memory,
                                              double epsilon) {
  check_params(num_learner_actions, num_opponent_actions, memory, epsilon);
  return {make_stage(num_learner_actions, num_opponent_actions),
          make_psi(num_learner_actions, num_opponent_actions, memory, epsilon, 0, false), epsilon,
          memory, 0};
}

LowerBoundPair build_lower_bound_pair(std::size_t num_learner_actions,
                                      std::size_t num_opponent_actions, std::size_t memory,
                                      double epsilon) {
  check_params(num_learner_actions, num_opponent_actions, memory, epsilon);
  const std::size_t na = num_learner_actions;
  const std::size_t nb = num_opponent_actions;
  // The first clean window after the special one.
  const std::size_t window_states = game::state_count(na * nb, memory - 1);
  std::size_t s_prime = 0;
  for (std::size_t w = 1; w < window_states && s_prime == 0; ++w) {
    bool clean = true;
    for (const game::Pair& p : game::decode_state(w, memory - 1, na, nb)) {
      clean = clean && is_clean(p, na - 1, nb - 2);
    }
    if (clean) s_prime = w;
  }
  if (s_prime == 0) {
    throw InvalidParams("lower bound pair: need at least two clean windows, ((A-1)(B-2))^(m-1) >= 2");
  }
  LowerBoundPair out{build_lower_bound_instance(na, nb, memory, epsilon),
                     {make_stage(na, nb), make_psi(na, nb, memory, epsilon, s_prime, true), epsilon,
                      memory, 0},
                     s_prime};
  return out;
}

double predicted_gain(std::size_t memory, double epsilon) noexcept {
  return (0.5 + epsilon) / static_cast<double>(memory);
}

double predicted_gain_prime(std::size_t memory, double epsilon) noexcept {
  return (0.5 + 2.0 * epsilon) / static_cast<double>(memory);
}

std::vector<double> occupancy(const selector::RunTrace& trace, std::size_t order,
                              std::size_t num_learner_actions, std::size_t num_opponent_actions) {
  if (trace.steps.size() != trace.horizon) throw InvalidArgument("occupancy: trace has no step records");
  if (trace.initial_history.size() < order) {
    throw OrderTooLarge("occupancy: initial history shorter than the order");
  }
  game::HistoryState history(std::max<std::size_t>(order, 1), num_learner_actions, num_opponent_actions);
  for (const game::Pair& p : trace.initial_history) history.push(p);
  std::vector<double> lambda(game::state_count(num_learner_actions * num_opponent_actions, order), 0.0);
  for (const selector::StepRecord& step : trace.steps) {
    lambda[history.encode(order)] += 1.0;
    history.push({step.action, step.opponent_action});
  }
  return lambda;
}

double row_kl(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InvalidArgument("row_kl: size mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

double kl_decomposition(const game::OpponentPolicy& psi, const game::OpponentPolicy& psi_prime,
                        std::span<const double> lambda) {
  if (psi.domain_size() != psi_prime.domain_size() ||
      psi.num_opponent_actions() != psi_prime.num_opponent_actions() ||
      psi.kind() != psi_prime.kind()) {
    throw InvalidArgument("kl_decomposition: opponents do not share a context space");
  }
  if (lambda.size() != psi.domain_size()) throw InvalidArgument("kl_decomposition: occupancy has wrong size");
  double total = 0.0;
  for (std::size_t s = 0; s < lambda.size(); ++s) {
    if (lambda[s] <= 0.0) continue;
    total += lambda[s] * row_kl(psi.row(s), psi_prime.row(s));
  }
  return total;
}

}  // namespace mrbear::adversarial
