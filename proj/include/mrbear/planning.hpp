#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mrbear/mdp.hpp"

namespace mrbear::mdp {

inline constexpr double kPlanningTol = 1e-9;
inline constexpr std::size_t kMaxIterations = 1'000'000;
// Exact diameter computation is attempted only when S * A is at most this.
inline constexpr std::size_t kDiameterSizeGuard = 10'000;

/// max(v) - min(v). Throws EmptyVector on an empty input.
double span(std::span<const double> v);

/// Gain and bias of a stationary policy from the Poisson equation
/// h + g 1 = r^pi + P^pi h with h(0) = 0, solved by a dense LU factorization.
/// Throws NonUnichain when the induced chain has more than one recurrent
/// class (the bordered Poisson system is then singular).
GainBias evaluate_policy(const TabularMdp& mdp, const StationaryPolicy& policy);

struct OptimalSolution {
  GainBias gain_bias;
  StationaryPolicy policy;
};

/// Optimal gain, a bias solving the optimality equation and a greedy
/// policy, by relative value iteration on the lazy chain (I + P) / 2.
/// Iterates until sp(u_{n+1} - u_n) < tol; the lazy chain is aperiodic, so
/// periodic MDPs converge as well. The returned bias is rescaled to the
/// original chain and pinned to zero at state 0.
OptimalSolution solve_optimal(const TabularMdp& mdp, double tol = kPlanningTol);

/// V*_T by backward induction from the zero vector.
std::vector<double> finite_horizon_value(const TabularMdp& mdp, std::size_t horizon);

/// Greedy action per state for the one-step lookahead r + P h. Ties go to
/// the lowest action index.
std::vector<std::size_t> greedy_actions(const TabularMdp& mdp, std::span<const double> h);

// -- Markov chain analysis ----------------------------------------------------

/// Unique stationary distribution; throws NotErgodic if it is not unique.
std::vector<double> stationary_distribution(const SquareMatrix& chain);

/// tau_1(A) = max_{i,j} 1/2 sum_k |A_ik - A_jk| for a matrix with constant
/// row sums.
double ergodicity_coefficient(const SquareMatrix& matrix);

/// Deviation matrix H = (I - P + P_inf)^{-1} (I - P_inf).
SquareMatrix deviation_matrix(const SquareMatrix& chain);

/// Kemeny index: the trace of the deviation matrix.
double kemeny_index(const SquareMatrix& chain);

/// Worst-case minimal expected hitting time over ordered state pairs.
/// Returns +inf when some state cannot be reached. Throws TooLarge when
/// S * A exceeds kDiameterSizeGuard.
double diameter(const TabularMdp& mdp);

/// Stationary distribution, Kemeny index and ergodicity coefficient of a
/// chain, plus the diameter of `mdp` when requested and within the size
/// guard (otherwise the diameter is left empty).
ChainStats chain_stats(const SquareMatrix& chain, bool compute_diameter = false,
                       const TabularMdp* mdp = nullptr);

struct SpanBoundCheck {
  double lhs = 0.0;  // sp(h^pi)
  double rhs = 0.0;  // 2 sp(r^pi) kappa^pi
  bool holds = false;
};

SpanBoundCheck verify_span_bound(const TabularMdp& mdp, const StationaryPolicy& policy);

}  // namespace mrbear::mdp
