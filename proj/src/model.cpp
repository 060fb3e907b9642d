#include "maxquad/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace maxquad {

MatrixXd AffineMatrixMap::operator()(const VectorXd& x) const {
  if (int(per_coord.size()) != x.size())
    throw std::invalid_argument("AffineMatrixMap: point dimension mismatch");
  MatrixXd s = constant;
  for (int k = 0; k < x.size(); ++k) s += x[k] * per_coord[size_t(k)];
  return s;
}

AffineMatrixMap AffineMatrixMap::constant_map(MatrixXd s0) {
  const int d = int(s0.rows());
  AffineMatrixMap m;
  m.constant = std::move(s0);
  m.per_coord.assign(size_t(d), MatrixXd::Zero(d, d));
  return m;
}

ControlMode make_lognormal_mode(const std::string& label, double sigma1, double sigma2,
                                double rho) {
  if (std::abs(rho) > 1.0)
    throw std::invalid_argument("make_lognormal_mode: |rho| must be <= 1");
  ControlMode mode;
  mode.label = label;
  mode.drift = AffineMap::zero(2);
  mode.diffusion.constant = MatrixXd::Zero(2, 2);
  MatrixXd s1 = MatrixXd::Zero(2, 2);
  s1(0, 0) = sigma1;
  MatrixXd s2 = MatrixXd::Zero(2, 2);
  s2(1, 0) = sigma2 * rho;
  s2(1, 1) = sigma2 * std::sqrt(1.0 - rho * rho);
  mode.diffusion.per_coord = {s1, s2};
  mode.lognormal = LognormalTag{sigma1, sigma2, rho};
  return mode;
}

int ProblemSpec::num_steps() const {
  if (!(step > 0.0)) throw std::invalid_argument("ProblemSpec: step must be positive");
  const double ratio = horizon / step;
  const int n = int(std::lround(ratio));
  if (n < 1 || std::abs(ratio - double(n)) > 1e-9 * std::max(1.0, ratio))
    throw std::invalid_argument("ProblemSpec: horizon/step must be a positive integer");
  return n;
}

VectorXd euler_step(const ControlMode& mode, double epsilon, double h, const VectorXd& x,
                    const VectorXd& w) {
  if (!(h > 0.0)) throw std::invalid_argument("euler_step: h must be positive");
  if (x.size() != w.size() || x.size() != mode.dim())
    throw std::invalid_argument("euler_step: dimension mismatch");
  return x + mode.drift(x) * h + epsilon * (mode.diffusion(x) * w);
}

double nonlinear_generator(const ControlMode& mode, double epsilon, const VectorXd& x,
                           double r, const VectorXd& p, const MatrixXd& gamma) {
  if (mode.custom_generator) return mode.custom_generator(x, r, p, gamma);
  const MatrixXd sigma = mode.diffusion(x);
  double value = 0.5 * (1.0 - epsilon * epsilon) * (sigma * sigma.transpose() * gamma).trace();
  value -= mode.discount * r;
  if (mode.running_reward) value += evaluate(*mode.running_reward, x);
  return value;  // proportional split: the drift term f - f_underline vanishes
}

namespace {

void check_sigma_at(const ControlMode& mode, const VectorXd& x, double& worst_cond,
                    std::vector<std::string>& issues) {
  const MatrixXd sigma = mode.diffusion(x);
  Eigen::JacobiSVD<MatrixXd> svd(sigma);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (smin <= 0.0 || !std::isfinite(smax / smin)) {
    std::ostringstream os;
    os << "mode '" << mode.label << "': singular diffusion at x = [" << x.transpose() << "]";
    issues.push_back(os.str());
    worst_cond = std::numeric_limits<double>::infinity();
  } else {
    worst_cond = std::max(worst_cond, smax / smin);
  }
}

}  // namespace

SplitReport validate_split(const ProblemSpec& spec) {
  SplitReport report;
  const int d = spec.dim;
  const double eps2 = spec.epsilon * spec.epsilon;

  if (!(spec.epsilon > 0.0 && spec.epsilon <= 1.0))
    report.issues.push_back("epsilon must lie in (0, 1]");
  try {
    spec.num_steps();
  } catch (const std::exception& e) {
    report.issues.push_back(e.what());
  }
  if (int(spec.state_box.size()) != d)
    report.issues.push_back("state_box dimension does not match problem dimension");
  if (spec.terminal.dim() != d)
    report.issues.push_back("terminal function dimension does not match problem");
  if (spec.modes.empty()) report.issues.push_back("no control modes configured");

  // Proportional split: dGamma G = (1-eps^2)/2 sigma sigma', a = eps^2 sigma
  // sigma', so the admissibility trace is d (1-eps^2) / (2 eps^2).
  report.trace_value = double(d) * (1.0 - eps2) / (2.0 * eps2);
  report.margin = 1.0 - report.trace_value;
  if (report.trace_value > 1.0 + 1e-12) {
    std::ostringstream os;
    os << "split condition failed: d(1-eps^2)/(2 eps^2) = " << report.trace_value
       << " > 1 (need epsilon^2 >= d/(d+2), i.e. epsilon >= "
       << std::sqrt(double(d) / double(d + 2)) << ")";
    report.issues.push_back(os.str());
  }

  // Diffusion invertibility sampled at the box corners and center.
  if (int(spec.state_box.size()) == d && d <= 16) {
    for (const auto& mode : spec.modes) {
      double worst = 1.0;
      VectorXd center(d);
      for (int k = 0; k < d; ++k)
        center[k] = 0.5 * (spec.state_box[size_t(k)].lo + spec.state_box[size_t(k)].hi);
      check_sigma_at(mode, center, worst, report.issues);
      for (uint32_t mask = 0; mask < (1u << d); ++mask) {
        VectorXd corner(d);
        for (int k = 0; k < d; ++k)
          corner[k] = (mask >> k) & 1u ? spec.state_box[size_t(k)].hi
                                       : spec.state_box[size_t(k)].lo;
        check_sigma_at(mode, corner, worst, report.issues);
      }
      report.sigma_condition.push_back(worst);
    }
  }

  report.ok = report.issues.empty();
  return report;
}

std::string SplitReport::summary() const {
  std::ostringstream os;
  os << (ok ? "split ok" : "split INVALID") << "; trace=" << trace_value
     << " margin=" << margin;
  for (size_t m = 0; m < sigma_condition.size(); ++m)
    os << "; cond[mode " << m << "]=" << sigma_condition[m];
  for (const auto& issue : issues) os << "\n  - " << issue;
  return os.str();
}

}  // namespace maxquad
