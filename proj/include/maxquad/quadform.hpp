#pragma once

#include <Eigen/Dense>
#include <ostream>
#include <string>
#include <vector>

namespace maxquad {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Parameter triple z = (Q, b, c) of the quadratic q(x) = 1/2 x'Qx + b.x + c.
/// Q is stored exactly symmetric (bit-exact mirrored upper triangle).
struct QuadraticForm {
  MatrixXd Q;
  VectorXd b;
  double c = 0.0;

  QuadraticForm() = default;
  QuadraticForm(MatrixXd q, VectorXd lin, double constant);

  int dim() const { return int(b.size()); }
  bool finite() const;
};

/// Mirror the upper triangle onto the lower one; averages asymmetric input.
MatrixXd symmetrized(const MatrixXd& m);

/// True when all eigenvalues of Q are <= -eta_min.
bool is_concave(const QuadraticForm& q, double eta_min = 0.0);

double evaluate(const QuadraticForm& q, const VectorXd& x);

/// Finite set of quadratic forms representing their pointwise supremum.
/// Immutable after construction; nonempty; all members share one dimension.
class MaxPlusFunction {
 public:
  MaxPlusFunction(int dim, std::vector<QuadraticForm> forms);

  int dim() const { return dim_; }
  int size() const { return int(forms_.size()); }
  const QuadraticForm& form(int i) const { return forms_.at(size_t(i)); }
  const std::vector<QuadraticForm>& forms() const { return forms_; }

 private:
  int dim_;
  std::vector<QuadraticForm> forms_;
};

struct SupResult {
  double value;
  int index;  // lowest maximizing index
};

/// Pointwise supremum and a maximizer; ties break to the lowest index.
SupResult sup_evaluate(const MaxPlusFunction& f, const VectorXd& x);

/// Triple representing x -> q(Ax + b0). Exact coefficient arithmetic:
/// Q' = A'QA, b' = A'(Q b0 + b), c' = 1/2 b0'Q b0 + b.b0 + c.
QuadraticForm compose_affine(const QuadraticForm& q, const MatrixXd& a,
                             const VectorXd& b0);

/// Indices kept by duplicate removal: a form is dropped only when every
/// coefficient of its triple is within tol of an earlier kept form.
std::vector<int> prune_duplicate_indices(const MaxPlusFunction& f, double tol);
MaxPlusFunction prune_duplicates(const MaxPlusFunction& f, double tol);

// -- monomial basis shared by regression and the packed evaluator -----------
// Order: [1, x_0..x_{d-1}, x_k x_l for k<=l in row-major upper triangle].

int monomial_count(int dim);
void fill_monomials(const VectorXd& x, double* out);

/// Coefficient vector theta with q(x) = theta . monomials(x).
void form_to_coefficients(const QuadraticForm& q, double* theta);

/// Structure-of-arrays copy of a MaxPlusFunction for tight evaluation loops.
/// Values computed here agree with evaluate() up to rounding (the arithmetic
/// is reassociated), which is the evaluation the solver's selections use.
class PackedForms {
 public:
  explicit PackedForms(const MaxPlusFunction& f);

  int dim() const { return dim_; }
  int size() const { return n_; }
  int n_monomials() const { return p_; }

  double value(int form, const double* phi) const {
    double v = 0.0;
    for (int k = 0; k < p_; ++k) v += coef_[size_t(k)][size_t(form)] * phi[k];
    return v;
  }

  /// out[i] = q_i evaluated at the point with monomial vector phi.
  void values_into(const double* phi, double* out) const;

  /// Maximum entry and its lowest index over values_into(phi, scratch).
  SupResult sup(const double* phi, std::vector<double>& scratch) const;

 private:
  int dim_, n_, p_;
  std::vector<std::vector<double>> coef_;  // coef_[k][i]: monomial k, form i
};

// -- CSV dump ----------------------------------------------------------------
// One row per form: t, mode_label, Q upper triangle (row-major), b, c.

void write_form_csv_header(std::ostream& os, int dim);
void write_form_csv_row(std::ostream& os, double t, const std::string& mode_label,
                        const QuadraticForm& q);

}  // namespace maxquad
