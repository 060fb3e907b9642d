#include "maxquad/regression.hpp"

#include <cmath>
#include <stdexcept>

namespace maxquad {

namespace {

QuadraticForm coefficients_to_form(int d, const VectorXd& theta) {
  MatrixXd q = MatrixXd::Zero(d, d);
  VectorXd b(d);
  for (int k = 0; k < d; ++k) b[k] = theta[1 + k];
  int idx = 1 + d;
  for (int k = 0; k < d; ++k)
    for (int l = k; l < d; ++l) {
      const double coef = theta[idx++];
      if (k == l)
        q(k, k) = 2.0 * coef;
      else {
        q(k, l) = coef;
        q(l, k) = coef;
      }
    }
  return QuadraticForm(std::move(q), std::move(b), theta[0]);
}

}  // namespace

QuadraticForm fit_quadratic(const std::vector<VectorXd>& points,
                            const std::vector<double>& values, const FitOptions& options,
                            FitDiagnostics* diagnostics) {
  if (points.empty()) throw std::invalid_argument("fit_quadratic: no points");
  if (points.size() != values.size())
    throw std::invalid_argument("fit_quadratic: points/values size mismatch");
  const int d = int(points.front().size());
  const int n = int(points.size());
  const int p = monomial_count(d);
  for (const auto& x : points)
    if (int(x.size()) != d) throw std::invalid_argument("fit_quadratic: mixed dimensions");

  // Standardize coordinates for conditioning; the triple is mapped back
  // exactly through the affine composition rule afterwards.
  VectorXd mean = VectorXd::Zero(d);
  for (const auto& x : points) mean += x;
  mean /= double(n);
  VectorXd scale = VectorXd::Zero(d);
  for (const auto& x : points) scale += (x - mean).cwiseAbs2();
  scale = (scale / double(n)).cwiseSqrt();
  for (int k = 0; k < d; ++k)
    if (!(scale[k] > 1e-12 * (1.0 + std::abs(mean[k])))) scale[k] = 1.0;

  MatrixXd design(n, p);
  std::vector<double> phi(static_cast<size_t>(p), 0.0);
  for (int g = 0; g < n; ++g) {
    const VectorXd u = (points[size_t(g)] - mean).cwiseQuotient(scale);
    fill_monomials(u, phi.data());
    for (int k = 0; k < p; ++k) design(g, k) = phi[size_t(k)];
  }
  Eigen::Map<const VectorXd> y(values.data(), n);

  VectorXd theta;
  int rank = 0;
  if (options.ridge > 0.0) {
    const MatrixXd normal =
        design.transpose() * design + options.ridge * MatrixXd::Identity(p, p);
    theta = normal.ldlt().solve(design.transpose() * y);
    rank = p;
  } else {
    Eigen::BDCSVD<MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(options.sv_rel_cutoff);
    theta = svd.solve(y);
    rank = int(svd.rank());
  }

  if (diagnostics) {
    diagnostics->underdetermined = n < p;
    diagnostics->rank = rank;
    diagnostics->residual_norm = (design * theta - y).norm();
  }

  // Map back: q(x) = q_u((x - mean) / scale).
  const QuadraticForm in_u = coefficients_to_form(d, theta);
  MatrixXd unscale = MatrixXd::Zero(d, d);
  for (int k = 0; k < d; ++k) unscale(k, k) = 1.0 / scale[k];
  return compose_affine(in_u, unscale, -mean.cwiseQuotient(scale));
}

QuadraticForm project_concave(const QuadraticForm& q, double eta_min) {
  if (eta_min < 0.0) throw std::invalid_argument("project_concave: eta_min must be >= 0");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(q.Q);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("project_concave: eigendecomposition failed");
  // Compliance up to eigensolver rounding counts as compliant, otherwise the
  // projection would never be idempotent.
  const double slack = 32.0 * std::numeric_limits<double>::epsilon() *
                       std::max(1.0, q.Q.cwiseAbs().maxCoeff());
  if (es.eigenvalues().maxCoeff() <= -eta_min + slack) return q;
  VectorXd clamped = es.eigenvalues();
  for (int k = 0; k < clamped.size(); ++k) clamped[k] = std::min(clamped[k], -eta_min);
  MatrixXd rebuilt =
      es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose();
  return QuadraticForm(std::move(rebuilt), q.b, q.c);
}

}  // namespace maxquad
