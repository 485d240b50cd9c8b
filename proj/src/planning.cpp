#include "mrbear/planning.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "mrbear/errors.hpp"

namespace mrbear::mdp {

namespace {

// Nonzero transitions of every (s, a) pair, for the iterative solvers.
struct SparseModel {
  std::vector<std::size_t> offsets;  // size S*A + 1
  std::vector<std::size_t> next;
  std::vector<double> prob;

  explicit SparseModel(const TabularMdp& mdp) {
    const std::size_t n = mdp.num_states();
    offsets.reserve(n * mdp.num_actions() + 1);
    offsets.push_back(0);
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
        const auto row = mdp.row(s, a);
        for (std::size_t j = 0; j < n; ++j) {
          if (row[j] > 0.0) {
            next.push_back(j);
            prob.push_back(row[j]);
          }
        }
        offsets.push_back(next.size());
      }
    }
  }

  double expect(std::size_t pair, std::span<const double> v) const noexcept {
    double acc = 0.0;
    for (std::size_t k = offsets[pair]; k < offsets[pair + 1]; ++k) acc += prob[k] * v[next[k]];
    return acc;
  }
};

constexpr double kTieTol = 1e-10;

}  // namespace

double span(std::span<const double> v) {
  if (v.empty()) throw EmptyVector("span of an empty vector");
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

GainBias evaluate_policy(const TabularMdp& mdp, const StationaryPolicy& policy) {
  const SquareMatrix chain = induced_chain(mdp, policy);
  const std::vector<double> reward = induced_reward(mdp, policy);
  const auto n = static_cast<Eigen::Index>(mdp.num_states());

  // Unknowns x = (g, h_1, ..., h_{n-1}); h_0 is pinned to zero so its column
  // of (I - P) is replaced by the coefficient of g.
  Eigen::MatrixXd system(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      system(i, j) = (i == j ? 1.0 : 0.0) - chain(i, j);
    }
    system(i, 0) = 1.0;
  }
  Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(reward.data(), n);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  if (!(lu.rcond() > 1e-13)) {
    throw NonUnichain("induced chain has more than one recurrent class");
  }
  const Eigen::VectorXd x = lu.solve(rhs);

  GainBias result;
  result.gain = x(0);
  result.bias.assign(mdp.num_states(), 0.0);
  for (Eigen::Index i = 1; i < n; ++i) result.bias[i] = x(i);
  result.normalization = 0;

  double residual = 0.0;
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    double ph = 0.0;
    for (std::size_t j = 0; j < mdp.num_states(); ++j) ph += chain(s, j) * result.bias[j];
    residual = std::max(residual, std::abs(reward[s] + ph - result.gain - result.bias[s]));
  }
  result.residual = residual;
  return result;
}

std::vector<std::size_t> greedy_actions(const TabularMdp& mdp, std::span<const double> h) {
  std::vector<std::size_t> actions(mdp.num_states(), 0);
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      const auto row = mdp.row(s, a);
      double q = mdp.r(s, a);
      for (std::size_t j = 0; j < mdp.num_states(); ++j) q += row[j] * h[j];
      if (q > best + kTieTol) {
        best = q;
        actions[s] = a;
      }
    }
  }
  return actions;
}

OptimalSolution solve_optimal(const TabularMdp& mdp, double tol) {
  if (!(tol > 0.0)) throw InvalidArgument("solve_optimal: tol must be positive");
  const std::size_t n = mdp.num_states();
  const std::size_t num_actions = mdp.num_actions();
  const SparseModel model(mdp);

  std::vector<double> u(n, 0.0), next(n, 0.0);
  double lo = 0.0, hi = 0.0;
  bool converged = false;
  for (std::size_t iter = 0; iter < kMaxIterations; ++iter) {
    for (std::size_t s = 0; s < n; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < num_actions; ++a) {
        const double q = mdp.r(s, a) + 0.5 * u[s] + 0.5 * model.expect(s * num_actions + a, u);
        best = std::max(best, q);
      }
      next[s] = best;
    }
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (std::size_t s = 0; s < n; ++s) {
      const double d = next[s] - u[s];
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    const double anchor = next[0];
    for (std::size_t s = 0; s < n; ++s) u[s] = next[s] - anchor;
    if (hi - lo < tol) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NoConvergence("relative value iteration hit the iteration cap");

  GainBias gb;
  gb.gain = 0.5 * (lo + hi);
  gb.bias.resize(n);
  for (std::size_t s = 0; s < n; ++s) gb.bias[s] = 0.5 * u[s];
  gb.normalization = 0;

  const auto actions = greedy_actions(mdp, gb.bias);
  double residual = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < num_actions; ++a) {
      best = std::max(best, mdp.r(s, a) + model.expect(s * num_actions + a, gb.bias));
    }
    residual = std::max(residual, std::abs(best - gb.gain - gb.bias[s]));
  }
  gb.residual = residual;
  return {std::move(gb), StationaryPolicy::deterministic(num_actions, actions)};
}

std::vector<double> finite_horizon_value(const TabularMdp& mdp, std::size_t horizon) {
  if (horizon == 0) throw InvalidArgument("finite_horizon_value: horizon must be >= 1");
  const std::size_t n = mdp.num_states();
  const std::size_t num_actions = mdp.num_actions();
  const SparseModel model(mdp);
  std::vector<double> v(n, 0.0), next(n, 0.0);
  for (std::size_t step = 0; step < horizon; ++step) {
    for (std::size_t s = 0; s < n; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < num_actions; ++a) {
        best = std::max(best, mdp.r(s, a) + model.expect(s * num_actions + a, v));
      }
      next[s] = best;
    }
    v.swap(next);
  }
  return v;
}

double diameter(const TabularMdp& mdp) {
  const std::size_t n = mdp.num_states();
  const std::size_t num_actions = mdp.num_actions();
  if (n * num_actions > kDiameterSizeGuard) {
    throw TooLarge("diameter: S*A exceeds the exact-computation guard");
  }
  if (n == 1) return 0.0;
  const SparseModel model(mdp);
  double worst = 0.0;
  std::vector<double> hit(n), next(n);
  for (std::size_t target = 0; target < n; ++target) {
    // Backward reachability first: value iteration diverges (slowly) when
    // some state cannot reach the target under any policy.
    std::vector<char> reaches(n, 0);
    reaches[target] = 1;
    for (bool grew = true; grew;) {
      grew = false;
      for (std::size_t s = 0; s < n; ++s) {
        if (reaches[s]) continue;
        for (std::size_t a = 0; a < num_actions && !reaches[s]; ++a) {
          const std::size_t pair = s * num_actions + a;
          for (std::size_t k = model.offsets[pair]; k < model.offsets[pair + 1]; ++k) {
            if (reaches[model.next[k]]) {
              reaches[s] = 1;
              grew = true;
              break;
            }
          }
        }
      }
    }
    if (std::find(reaches.begin(), reaches.end(), 0) != reaches.end()) {
      return std::numeric_limits<double>::infinity();
    }

    // Minimal expected number of transitions to reach `target`.
    std::fill(hit.begin(), hit.end(), 0.0);
    bool converged = false;
    for (std::size_t iter = 0; iter < kMaxIterations; ++iter) {
      double change = 0.0;
      for (std::size_t s = 0; s < n; ++s) {
        if (s == target) {
          next[s] = 0.0;
          continue;
        }
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < num_actions; ++a) {
          best = std::min(best, 1.0 + model.expect(s * num_actions + a, hit));
        }
        next[s] = best;
        change = std::max(change, std::abs(next[s] - hit[s]));
      }
      hit.swap(next);
      if (change <= 1e-12 * std::max(1.0, *std::max_element(hit.begin(), hit.end()))) {
        converged = true;
        break;
      }
    }
    if (!converged) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, *std::max_element(hit.begin(), hit.end()));
  }
  return worst;
}

}  // namespace mrbear::mdp
