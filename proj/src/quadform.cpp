#include "maxquad/quadform.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <unordered_set>

#include "maxquad/util.hpp"

namespace maxquad {

MatrixXd symmetrized(const MatrixXd& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("symmetrized: matrix not square");
  MatrixXd out(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i) {
    out(i, i) = m(i, i);
    for (int j = i + 1; j < m.cols(); ++j) {
      const double v = 0.5 * (m(i, j) + m(j, i));
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

QuadraticForm::QuadraticForm(MatrixXd q, VectorXd lin, double constant)
    : Q(symmetrized(q)), b(std::move(lin)), c(constant) {
  if (Q.rows() != b.size())
    throw std::invalid_argument("QuadraticForm: Q and b dimensions disagree");
}

bool QuadraticForm::finite() const {
  return Q.allFinite() && b.allFinite() && std::isfinite(c);
}

bool is_concave(const QuadraticForm& q, double eta_min) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(q.Q, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff() <= -eta_min;
}

double evaluate(const QuadraticForm& q, const VectorXd& x) {
  if (x.size() != q.b.size())
    throw std::invalid_argument("evaluate: point dimension does not match form");
  return 0.5 * x.dot(q.Q * x) + q.b.dot(x) + q.c;
}

MaxPlusFunction::MaxPlusFunction(int dim, std::vector<QuadraticForm> forms)
    : dim_(dim), forms_(std::move(forms)) {
  if (dim_ <= 0) throw std::invalid_argument("MaxPlusFunction: dimension must be positive");
  if (forms_.empty()) throw std::invalid_argument("MaxPlusFunction: empty form set");
  for (const auto& f : forms_)
    if (f.dim() != dim_)
      throw std::invalid_argument("MaxPlusFunction: mixed form dimensions");
}

SupResult sup_evaluate(const MaxPlusFunction& f, const VectorXd& x) {
  SupResult best{evaluate(f.form(0), x), 0};
  for (int i = 1; i < f.size(); ++i) {
    const double v = evaluate(f.form(i), x);
    if (v > best.value) best = {v, i};
  }
  return best;
}

QuadraticForm compose_affine(const QuadraticForm& q, const MatrixXd& a,
                             const VectorXd& b0) {
  const int d = q.dim();
  if (a.rows() != d || a.cols() != d || b0.size() != d)
    throw std::invalid_argument("compose_affine: shape mismatch");
  MatrixXd qq = a.transpose() * q.Q * a;
  VectorXd bb = a.transpose() * (q.Q * b0 + q.b);
  const double cc = 0.5 * b0.dot(q.Q * b0) + q.b.dot(b0) + q.c;
  return QuadraticForm(std::move(qq), std::move(bb), cc);
}

namespace {

bool triple_within(const QuadraticForm& a, const QuadraticForm& b, double tol) {
  if (std::abs(a.c - b.c) > tol) return false;
  for (int i = 0; i < a.b.size(); ++i)
    if (std::abs(a.b[i] - b.b[i]) > tol) return false;
  for (int i = 0; i < a.Q.rows(); ++i)
    for (int j = i; j < a.Q.cols(); ++j)
      if (std::abs(a.Q(i, j) - b.Q(i, j)) > tol) return false;
  return true;
}

std::string form_bytes(const QuadraticForm& q) {
  std::string bytes;
  const int d = q.dim();
  bytes.reserve(size_t(d * (d + 1) / 2 + d + 1) * sizeof(double));
  auto push = [&bytes](double v) {
    char raw[sizeof(double)];
    std::memcpy(raw, &v, sizeof(double));
    bytes.append(raw, sizeof(double));
  };
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) push(q.Q(i, j));
  for (int i = 0; i < d; ++i) push(q.b[i]);
  push(q.c);
  return bytes;
}

}  // namespace

std::vector<int> prune_duplicate_indices(const MaxPlusFunction& f, double tol) {
  if (tol < 0) throw std::invalid_argument("prune_duplicates: tol must be >= 0");
  std::vector<int> kept;
  kept.reserve(size_t(f.size()));
  if (tol == 0.0) {
    // Exact duplicates only: hash the coefficient bytes.
    std::unordered_set<std::string> seen;
    for (int i = 0; i < f.size(); ++i)
      if (seen.insert(form_bytes(f.form(i))).second) kept.push_back(i);
    return kept;
  }
  for (int i = 0; i < f.size(); ++i) {
    bool duplicate = false;
    for (const int k : kept)
      if (triple_within(f.form(i), f.form(k), tol)) {
        duplicate = true;
        break;
      }
    if (!duplicate) kept.push_back(i);
  }
  return kept;
}

MaxPlusFunction prune_duplicates(const MaxPlusFunction& f, double tol) {
  const auto kept = prune_duplicate_indices(f, tol);
  std::vector<QuadraticForm> forms;
  forms.reserve(kept.size());
  for (const int i : kept) forms.push_back(f.form(i));
  return MaxPlusFunction(f.dim(), std::move(forms));
}

int monomial_count(int dim) { return 1 + dim + dim * (dim + 1) / 2; }

void fill_monomials(const VectorXd& x, double* out) {
  const int d = int(x.size());
  out[0] = 1.0;
  for (int k = 0; k < d; ++k) out[1 + k] = x[k];
  int idx = 1 + d;
  for (int k = 0; k < d; ++k)
    for (int l = k; l < d; ++l) out[idx++] = x[k] * x[l];
}

void form_to_coefficients(const QuadraticForm& q, double* theta) {
  const int d = q.dim();
  theta[0] = q.c;
  for (int k = 0; k < d; ++k) theta[1 + k] = q.b[k];
  int idx = 1 + d;
  for (int k = 0; k < d; ++k)
    for (int l = k; l < d; ++l) theta[idx++] = (k == l) ? 0.5 * q.Q(k, k) : q.Q(k, l);
}

PackedForms::PackedForms(const MaxPlusFunction& f)
    : dim_(f.dim()), n_(f.size()), p_(monomial_count(f.dim())) {
  coef_.assign(size_t(p_), std::vector<double>(size_t(n_)));
  std::vector<double> theta(static_cast<size_t>(p_), 0.0);
  for (int i = 0; i < n_; ++i) {
    form_to_coefficients(f.form(i), theta.data());
    for (int k = 0; k < p_; ++k) coef_[size_t(k)][size_t(i)] = theta[size_t(k)];
  }
}

void PackedForms::values_into(const double* phi, double* out) const {
  const double* c0 = coef_[0].data();
  const double phi0 = phi[0];
  for (int i = 0; i < n_; ++i) out[i] = c0[i] * phi0;
  for (int k = 1; k < p_; ++k) {
    const double* ck = coef_[size_t(k)].data();
    const double phik = phi[k];
    for (int i = 0; i < n_; ++i) out[i] += ck[i] * phik;
  }
}

SupResult PackedForms::sup(const double* phi, std::vector<double>& scratch) const {
  scratch.resize(size_t(n_));
  values_into(phi, scratch.data());
  SupResult best{scratch[0], 0};
  for (int i = 1; i < n_; ++i)
    if (scratch[size_t(i)] > best.value) best = {scratch[size_t(i)], i};
  return best;
}

void write_form_csv_header(std::ostream& os, int dim) {
  os << "t,mode_label";
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) os << ",Q" << i << j;
  for (int i = 0; i < dim; ++i) os << ",b" << i;
  os << ",c\n";
}

void write_form_csv_row(std::ostream& os, double t, const std::string& mode_label,
                        const QuadraticForm& q) {
  os << format_double(t) << ',' << mode_label;
  const int d = q.dim();
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) os << ',' << format_double(q.Q(i, j));
  for (int i = 0; i < d; ++i) os << ',' << format_double(q.b[i]);
  os << ',' << format_double(q.c) << '\n';
}

}  // namespace maxquad
