#include "maxquad/scheme.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace maxquad {

std::vector<WeightedIncrement> moment_match(const std::vector<WeightedIncrement>& raw,
                                            double h, bool rescale) {
  if (raw.empty()) return {};
  const int d = int(raw.front().w.size());
  MatrixXd a = MatrixXd::Identity(d, d);
  if (rescale) {
    MatrixXd cov = MatrixXd::Zero(d, d);
    double total = 0.0;
    for (const auto& inc : raw) {
      cov += inc.weight * (inc.w * inc.w.transpose());
      total += inc.weight;
    }
    cov /= total;
    Eigen::LLT<MatrixXd> llt(cov);
    bool usable = llt.info() == Eigen::Success;
    if (usable) {
      const MatrixXd l = llt.matrixL();
      const double dmax = cov.diagonal().maxCoeff();
      for (int k = 0; k < d; ++k)
        if (!(l(k, k) * l(k, k) > 1e-12 * dmax)) usable = false;
      if (usable)
        a = std::sqrt(h) *
            l.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(d, d));
    }
    // not usable: rank-deficient group, antithetic pairing only
  }
  std::vector<WeightedIncrement> out;
  out.reserve(2 * raw.size());
  for (const auto& inc : raw) {
    VectorXd v = a * inc.w;
    out.push_back({v, inc.weight});
    out.push_back({-v, inc.weight});
  }
  return out;
}

WeightContext::WeightContext(const ControlMode& mode, double epsilon, double h_,
                             const VectorXd& x)
    : h(h_) {
  const MatrixXd scaled = epsilon * mode.diffusion(x);
  Eigen::FullPivLU<MatrixXd> lu(scaled);
  if (!lu.isInvertible()) {
    std::ostringstream os;
    os << "weight_P: singular scaled diffusion for mode '" << mode.label << "' at x = ["
       << x.transpose() << "]";
    throw std::runtime_error(os.str());
  }
  sigma_inv = lu.inverse();
}

double weight_p0() { return 1.0; }

VectorXd weight_p1(const WeightContext& ctx, const VectorXd& w) {
  return ctx.sigma_inv.transpose() * w / ctx.h;
}

MatrixXd weight_p2(const WeightContext& ctx, const VectorXd& w) {
  const int d = int(w.size());
  const MatrixXd core = w * w.transpose() - ctx.h * MatrixXd::Identity(d, d);
  return ctx.sigma_inv.transpose() * core * ctx.sigma_inv / (ctx.h * ctx.h);
}

OperatorTerms estimate_terms(const ControlMode& mode, double epsilon, double h,
                             const VectorXd& x, const std::vector<WeightedIncrement>& incs,
                             const std::vector<double>& values) {
  if (incs.empty()) throw std::invalid_argument("estimate_terms: empty selection");
  if (incs.size() != values.size())
    throw std::invalid_argument("estimate_terms: increments/values size mismatch");
  const int d = int(x.size());
  const WeightContext ctx(mode, epsilon, h, x);

  double total = 0.0, acc0 = 0.0;
  VectorXd acc1 = VectorXd::Zero(d);
  MatrixXd acc2 = MatrixXd::Zero(d, d);
  for (size_t j = 0; j < incs.size(); ++j) {
    const double wt = incs[j].weight;
    const double v = values[j];
    const VectorXd& w = incs[j].w;
    total += wt;
    acc0 += wt * v;
    acc1 += (wt * v) * w;
    acc2 += (wt * v) * (w * w.transpose());
    acc2.diagonal().array() -= wt * v * h;
  }

  OperatorTerms terms;
  terms.d0 = acc0 / total;
  terms.d1 = ctx.sigma_inv.transpose() * (acc1 / total) / h;
  const MatrixXd sandwich =
      ctx.sigma_inv.transpose() * (acc2 / total) * ctx.sigma_inv / (h * h);
  terms.d2 = symmetrized(sandwich);
  return terms;
}

double estimate_d0(const std::vector<WeightedIncrement>& incs,
                   const std::vector<double>& values) {
  if (incs.empty()) throw std::invalid_argument("estimate_d0: empty selection");
  double total = 0.0, acc = 0.0;
  for (size_t j = 0; j < incs.size(); ++j) {
    total += incs[j].weight;
    acc += incs[j].weight * values[j];
  }
  return acc / total;
}

VectorXd estimate_d1(const ControlMode& mode, double epsilon, double h, const VectorXd& x,
                     const std::vector<WeightedIncrement>& incs,
                     const std::vector<double>& values) {
  return estimate_terms(mode, epsilon, h, x, incs, values).d1;
}

MatrixXd estimate_d2(const ControlMode& mode, double epsilon, double h, const VectorXd& x,
                     const std::vector<WeightedIncrement>& incs,
                     const std::vector<double>& values) {
  return estimate_terms(mode, epsilon, h, x, incs, values).d2;
}

double operator_value(const ControlMode& mode, double epsilon, double h, const VectorXd& x,
                      const std::vector<WeightedIncrement>& incs,
                      const std::vector<double>& values) {
  const OperatorTerms terms = estimate_terms(mode, epsilon, h, x, incs, values);
  return terms.d0 +
         h * nonlinear_generator(mode, epsilon, x, terms.d0, terms.d1, terms.d2);
}

std::vector<double> selection_values(const ControlMode& mode, double epsilon, double h,
                                     const VectorXd& x, const SelectionMap& selection,
                                     const PackedForms& next) {
  const VectorXd base = x + mode.drift(x) * h;
  const MatrixXd scaled = epsilon * mode.diffusion(x);
  std::vector<double> phi(size_t(next.n_monomials()));
  std::vector<double> values(selection.increments.size());
  for (size_t j = 0; j < selection.increments.size(); ++j) {
    const VectorXd image = base + scaled * selection.increments[j].w;
    fill_monomials(image, phi.data());
    values[j] = next.value(selection.form_index[j], phi.data());
  }
  return values;
}

double apply_operator(const ControlMode& mode, double epsilon, double h, const VectorXd& x,
                      const SelectionMap& selection, const PackedForms& next) {
  const std::vector<double> values = selection_values(mode, epsilon, h, x, selection, next);
  return operator_value(mode, epsilon, h, x, selection.increments, values);
}

SelectionMap build_selection(const PackedForms& next, const ControlMode& mode,
                             double epsilon, double h, const VectorXd& x_anchor,
                             std::vector<WeightedIncrement> increments) {
  if (next.size() == 0) throw std::invalid_argument("build_selection: empty form set");
  SelectionMap sel;
  sel.increments = std::move(increments);
  sel.form_index.resize(sel.increments.size());
  const VectorXd base = x_anchor + mode.drift(x_anchor) * h;
  const MatrixXd scaled = epsilon * mode.diffusion(x_anchor);
  std::vector<double> phi(size_t(next.n_monomials()));
  std::vector<double> scratch;
  for (size_t j = 0; j < sel.increments.size(); ++j) {
    const VectorXd image = base + scaled * sel.increments[j].w;
    fill_monomials(image, phi.data());
    sel.form_index[j] = next.sup(phi.data(), scratch).index;
  }
  return sel;
}

}  // namespace maxquad
