#pragma once

#include <vector>

#include "maxquad/quadform.hpp"

namespace maxquad {

struct FitOptions {
  double sv_rel_cutoff = 1e-10;  // singular values below cutoff * max are dropped
  double ridge = 0.0;            // optional Tikhonov strength (0 = minimal-norm)
};

struct FitDiagnostics {
  bool underdetermined = false;  // fewer points than coefficients
  int rank = 0;
  double residual_norm = 0.0;    // ||q(x_g) - y_g|| at the solution
};

/// Least-squares fit of a quadratic form over the monomial basis
/// {1, x_k, x_k x_l}. Features are standardized by the sample mean/stddev
/// before solving and the triple is mapped back exactly. Rank-deficient
/// systems resolve to the minimal-norm solution.
QuadraticForm fit_quadratic(const std::vector<VectorXd>& points,
                            const std::vector<double>& values,
                            const FitOptions& options = {},
                            FitDiagnostics* diagnostics = nullptr);

/// Clamp every eigenvalue of Q to min(lambda, -eta_min); b and c unchanged.
/// Returns the input bit-identically when already compliant.
QuadraticForm project_concave(const QuadraticForm& q, double eta_min);

}  // namespace maxquad
