#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mrbear/game.hpp"
#include "mrbear/selector.hpp"

namespace mrbear::adversarial {

inline constexpr std::size_t kMaxDeBruijnLength = 1'000'000;

struct DeBruijnSeq {
  std::size_t alphabet_size = 0;
  std::size_t order = 0;
  std::vector<std::size_t> symbols;  // cyclic, length alphabet_size^order
};

// Lexicographically least de Bruijn sequence (concatenated Lyndon words).
// An alphabet of size 1 yields the single-symbol sequence. Throws TooLarge
// beyond kMaxDeBruijnLength symbols.
DeBruijnSeq de_bruijn(std::size_t alphabet_size, std::size_t order);

// Symbol following the unique cyclic occurrence of `window` (oldest symbol
// first). Throws InvalidArgument if the window has the wrong length or
// contains a symbol outside the alphabet.
std::size_t db_successor(const DeBruijnSeq& seq, std::span<const std::size_t> window);

// Hard instance of the lower-bound construction. The stage game pays 1 only
// for (a*, b*) = (A-1, B-2); b_r = B-1 is the opponent's repeat action and
// 0..B-3 is the de Bruijn alphabet. The opponent has order m. Contexts are
// split into the window of the m-1 most recent pairs and the oldest pair:
//  - window clean (no a*, only de Bruijn symbols), oldest action not a*:
//    b* w.p. 1/2 + bias, otherwise the de Bruijn successor of the window;
//  - window clean, oldest action a*: b* w.p. 1/2 + bias, otherwise b_r;
//  - window dirty: repeat the oldest opponent action if it is a de Bruijn
//    symbol, else play symbol 0.
// bias is epsilon at the special window (all pairs (0, 0)) and zero at
// every other clean window.
struct LowerBoundInstance {
  game::StageGame stage;
  game::OpponentPolicy psi;
  double epsilon = 0.0;
  std::size_t memory = 0;         // m
  std::size_t special_state = 0;  // the special window, encoded at order m-1
};

// Requires A >= 2, B >= 3, m >= 2 and 0 < epsilon < 1/4; InvalidParams
// otherwise.
LowerBoundInstance build_lower_bound_instance(std::size_t num_learner_actions,
                                              std::size_t num_opponent_actions, std::size_t memory,
                                              double epsilon);

struct LowerBoundPair {
  LowerBoundInstance inst;
  LowerBoundInstance inst_prime;
  std::size_t s_prime = 0;  // perturbed window, encoded at order m-1
};

// inst_prime equals inst except that the window s_prime carries b* mass
// 1/2 + 2 epsilon. Needs a second clean window, i.e.
// ((A-1)(B-2))^(m-1) >= 2; InvalidParams otherwise.
LowerBoundPair build_lower_bound_pair(std::size_t num_learner_actions,
                                      std::size_t num_opponent_actions, std::size_t memory,
                                      double epsilon);

// Optimal gains predicted by the construction: (1/2 + epsilon) / m and
// (1/2 + 2 epsilon) / m.
double predicted_gain(std::size_t memory, double epsilon) noexcept;
double predicted_gain_prime(std::size_t memory, double epsilon) noexcept;

// Visit counts of the order-`order` states before each step of the trace,
// replayed from its initial history. Needs recorded steps.
std::vector<double> occupancy(const selector::RunTrace& trace, std::size_t order,
                              std::size_t num_learner_actions, std::size_t num_opponent_actions);

// KL(p || q) in nats; +inf when q misses mass of p.
double row_kl(std::span<const double> p, std::span<const double> q);

// sum_s lambda(s) KL(psi(s) || psi'(s)) over the opponents' shared contexts.
double kl_decomposition(const game::OpponentPolicy& psi, const game::OpponentPolicy& psi_prime,
                        std::span<const double> lambda);

}  // namespace mrbear::adversarial
