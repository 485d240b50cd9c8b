#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "mrbear/errors.hpp"
#include "mrbear/planning.hpp"

namespace mrbear::mdp {

namespace {

Eigen::MatrixXd to_eigen(const SquareMatrix& m) {
  const auto n = static_cast<Eigen::Index>(m.n);
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = m(i, j);
  return out;
}

void check_square(const SquareMatrix& m) {
  if (m.n == 0 || m.data.size() != m.n * m.n) {
    throw InvalidArgument("chain: matrix must be square and nonempty");
  }
}

}  // namespace

std::vector<double> stationary_distribution(const SquareMatrix& chain) {
  check_square(chain);
  const auto n = static_cast<Eigen::Index>(chain.n);
  // pi (I - P) = 0 with one equation replaced by sum(pi) = 1.
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - to_eigen(chain).transpose();
  system.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  if (!(lu.rcond() > 1e-13)) throw NotErgodic("stationary distribution is not unique");
  const Eigen::VectorXd pi = lu.solve(rhs);
  std::vector<double> out(pi.data(), pi.data() + n);
  for (double& x : out) {
    if (x < 0.0 && x > -1e-12) x = 0.0;
  }
  return out;
}

double ergodicity_coefficient(const SquareMatrix& matrix) {
  check_square(matrix);
  double worst = 0.0;
  for (std::size_t i = 0; i < matrix.n; ++i) {
    for (std::size_t j = i + 1; j < matrix.n; ++j) {
      double dist = 0.0;
      for (std::size_t k = 0; k < matrix.n; ++k) dist += std::abs(matrix(i, k) - matrix(j, k));
      worst = std::max(worst, 0.5 * dist);
    }
  }
  return worst;
}

SquareMatrix deviation_matrix(const SquareMatrix& chain) {
  const std::vector<double> pi = stationary_distribution(chain);
  const auto n = static_cast<Eigen::Index>(chain.n);
  const Eigen::Map<const Eigen::VectorXd> pi_vec(pi.data(), n);
  const Eigen::MatrixXd limit = Eigen::VectorXd::Ones(n) * pi_vec.transpose();
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd fundamental = identity - to_eigen(chain) + limit;
  const Eigen::MatrixXd h = fundamental.partialPivLu().solve(identity - limit);
  SquareMatrix out(chain.n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = h(i, j);
  return out;
}

double kemeny_index(const SquareMatrix& chain) {
  const SquareMatrix h = deviation_matrix(chain);
  double trace = 0.0;
  for (std::size_t i = 0; i < h.n; ++i) trace += h(i, i);
  return trace;
}

ChainStats chain_stats(const SquareMatrix& chain, bool compute_diameter, const TabularMdp* mdp) {
  ChainStats stats;
  stats.ergodicity_coeff = ergodicity_coefficient(chain);
  stats.stationary_dist = stationary_distribution(chain);
  stats.kemeny_index = kemeny_index(chain);
  if (compute_diameter) {
    if (mdp == nullptr) throw InvalidArgument("chain_stats: diameter requires the MDP");
    if (mdp->num_states() * mdp->num_actions() <= kDiameterSizeGuard) {
      stats.diameter = diameter(*mdp);
    }
  }
  return stats;
}

SpanBoundCheck verify_span_bound(const TabularMdp& mdp, const StationaryPolicy& policy) {
  const GainBias gb = evaluate_policy(mdp, policy);
  const std::vector<double> reward = induced_reward(mdp, policy);
  const double kappa = kemeny_index(induced_chain(mdp, policy));
  SpanBoundCheck check;
  check.lhs = span(gb.bias);
  check.rhs = 2.0 * span(reward) * kappa;
  check.holds = check.lhs <= check.rhs + 1e-9;
  return check;
}

}  // namespace mrbear::mdp
