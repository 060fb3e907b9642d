#pragma once

#include <vector>

#include "maxquad/model.hpp"
#include "maxquad/quadform.hpp"

namespace maxquad {

/// One Brownian increment with a multiplicity weight (duplicate draws
/// reweight the Monte Carlo average instead of being stored twice).
struct WeightedIncrement {
  VectorXd w;
  double weight = 1.0;
};

/// Antithetic pairing (+w, -w) plus an exact second-moment rescale so the
/// weighted empirical moments satisfy sum wt w = 0 and sum wt w w'/sum wt = h I.
/// This makes the sample operator exact on constants. When the empirical
/// covariance is rank deficient (tiny groups) the rescale is skipped and only
/// the antithetic pairing survives.
std::vector<WeightedIncrement> moment_match(const std::vector<WeightedIncrement>& raw,
                                            double h, bool rescale = true);

/// Assignment of a maximizing form of Z_{t+h} to each increment, anchored at
/// one outer state. The assignment is the argmax of the packed evaluation at
/// the anchored Euler image, ties to the lowest index.
struct SelectionMap {
  std::vector<WeightedIncrement> increments;
  std::vector<int> form_index;  // parallel to increments
  int owner_omega = -1;
  int owner_mode = -1;
  int owner_t = -1;

  int size() const { return int(increments.size()); }
};

SelectionMap build_selection(const PackedForms& next, const ControlMode& mode,
                             double epsilon, double h, const VectorXd& x_anchor,
                             std::vector<WeightedIncrement> increments);

// -- polynomial weights ------------------------------------------------------
// P0 = 1, P1(w) = sigma_ul(x)^{-T} w / h,
// P2(w) = sigma_ul(x)^{-T} (w w' - h I) sigma_ul(x)^{-1} / h^2,
// with sigma_ul = epsilon * sigma. The standard first/second-order Monte
// Carlo differentiation weights for an Euler step.

/// Cached inverse of the scaled diffusion at one point.
struct WeightContext {
  WeightContext(const ControlMode& mode, double epsilon, double h, const VectorXd& x);
  MatrixXd sigma_inv;  // (epsilon sigma(x))^{-1}
  double h;
};

double weight_p0();
VectorXd weight_p1(const WeightContext& ctx, const VectorXd& w);
MatrixXd weight_p2(const WeightContext& ctx, const VectorXd& w);

// -- derivative estimators and the pointwise operator -------------------------

struct OperatorTerms {
  double d0 = 0.0;
  VectorXd d1;
  MatrixXd d2;  // symmetrized
};

/// Weighted averages of values[j] * P^k(w_j). values[j] is the selected
/// quadratic evaluated at the Euler image of the estimation point.
OperatorTerms estimate_terms(const ControlMode& mode, double epsilon, double h,
                             const VectorXd& x, const std::vector<WeightedIncrement>& incs,
                             const std::vector<double>& values);

double estimate_d0(const std::vector<WeightedIncrement>& incs,
                   const std::vector<double>& values);
VectorXd estimate_d1(const ControlMode& mode, double epsilon, double h, const VectorXd& x,
                     const std::vector<WeightedIncrement>& incs,
                     const std::vector<double>& values);
MatrixXd estimate_d2(const ControlMode& mode, double epsilon, double h, const VectorXd& x,
                     const std::vector<WeightedIncrement>& incs,
                     const std::vector<double>& values);

/// Core of the pointwise scheme: d0 + h G(x, d0, d1, d2) for explicit values.
/// Linear in the values vector, which is what the max-plus distributivity
/// argument exploits.
double operator_value(const ControlMode& mode, double epsilon, double h, const VectorXd& x,
                      const std::vector<WeightedIncrement>& incs,
                      const std::vector<double>& values);

/// Evaluates the selection's forms at the Euler images of x and reduces them
/// through operator_value.
double apply_operator(const ControlMode& mode, double epsilon, double h, const VectorXd& x,
                      const SelectionMap& selection, const PackedForms& next);

/// Values the operator consumes at x: q(S(x, w_j), z_j) per selection entry.
std::vector<double> selection_values(const ControlMode& mode, double epsilon, double h,
                                     const VectorXd& x, const SelectionMap& selection,
                                     const PackedForms& next);

}  // namespace maxquad
