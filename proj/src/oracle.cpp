#include "maxquad/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace maxquad {

GaussHermiteRule gauss_hermite_rule(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite_rule: n must be >= 1");
  // Jacobi matrix of the (physicists') Hermite recurrence: zero diagonal,
  // off-diagonal sqrt(k/2). Eigenvalues are the nodes; the squared first
  // eigenvector components are the probabilistic weights.
  MatrixXd jacobi = MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double beta = std::sqrt(0.5 * double(k));
    jacobi(k, k - 1) = beta;
    jacobi(k - 1, k) = beta;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(jacobi);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("gauss_hermite_rule: eigensolver failed");

  GaussHermiteRule rule;
  rule.nodes.resize(size_t(n));
  rule.weights.resize(size_t(n));
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    // standard-normal node = sqrt(2) * Hermite node
    rule.nodes[size_t(i)] = std::sqrt(2.0) * es.eigenvalues()[i];
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[size_t(i)] = v0 * v0;
    total += v0 * v0;
  }
  for (double& w : rule.weights) w /= total;  // exact normalization
  return rule;
}

double oracle_constant_mode(const ProblemSpec& spec, const ControlMode& mode,
                            const VectorXd& x, int n_nodes, std::optional<double> horizon,
                            const std::function<double(const VectorXd&)>* payoff_override) {
  if (!mode.lognormal)
    throw std::invalid_argument("oracle_constant_mode: mode is not of the lognormal family");
  if (!mode.drift.is_zero() || mode.discount != 0.0 || mode.running_reward)
    throw std::invalid_argument(
        "oracle_constant_mode: requires zero drift, discount and running reward");
  if (x.size() != 2 || !(x[0] > 0.0) || !(x[1] > 0.0))
    throw std::invalid_argument("oracle_constant_mode: x must be a positive 2-vector");
  if (!payoff_override && !spec.exact_payoff)
    throw std::invalid_argument("oracle_constant_mode: no exact payoff available");

  const LognormalTag tag = *mode.lognormal;
  const double t = horizon.value_or(spec.horizon);
  const double sq_t = std::sqrt(t);
  const double drift1 = -0.5 * tag.sigma1 * tag.sigma1 * t;
  const double drift2 = -0.5 * tag.sigma2 * tag.sigma2 * t;
  const double cross = tag.rho;
  const double orth = std::sqrt(1.0 - tag.rho * tag.rho);

  const GaussHermiteRule rule = gauss_hermite_rule(n_nodes);
  VectorXd xi(2);
  double acc = 0.0;
  for (size_t i = 0; i < rule.nodes.size(); ++i) {
    const double g1 = rule.nodes[i];
    xi[0] = x[0] * std::exp(drift1 + tag.sigma1 * sq_t * g1);
    double inner = 0.0;
    for (size_t j = 0; j < rule.nodes.size(); ++j) {
      const double g2 = rule.nodes[j];
      xi[1] = x[1] * std::exp(drift2 + tag.sigma2 * sq_t * (cross * g1 + orth * g2));
      const double payoff =
          payoff_override ? (*payoff_override)(xi) : (*spec.exact_payoff)(xi);
      inner += rule.weights[j] * payoff;
    }
    acc += rule.weights[i] * inner;
  }
  return acc;
}

std::pair<double, double> error_norms(const std::vector<double>& computed,
                                      const std::vector<double>& reference) {
  if (computed.size() != reference.size() || computed.empty())
    throw std::invalid_argument("error_norms: mismatched or empty grids");
  double sup = 0.0, sum = 0.0;
  for (size_t i = 0; i < computed.size(); ++i) {
    const double err = std::abs(computed[i] - reference[i]);
    sup = std::max(sup, err);
    sum += err;
  }
  return {sup, sum / double(computed.size())};
}

}  // namespace maxquad
