#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "maxquad/model.hpp"

namespace maxquad {

/// Gauss-Hermite rule mapped to standard-normal expectations:
/// E[f(g)] ~ sum_i weights[i] * f(nodes[i]), weights normalized to sum 1.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Golub-Welsch construction (symmetric tridiagonal eigenproblem).
GaussHermiteRule gauss_hermite_rule(int n);

/// Reference value E[psi(xi_T)] for one two-asset lognormal mode with zero
/// drift, discount and running reward: the exact terminal distribution is
/// integrated with a tensor Gauss-Hermite rule against the exact payoff.
/// horizon overrides spec.horizon (used for intermediate-time references);
/// payoff_override replaces the spec's exact payoff (test hook).
double oracle_constant_mode(const ProblemSpec& spec, const ControlMode& mode,
                            const VectorXd& x, int n_nodes,
                            std::optional<double> horizon = {},
                            const std::function<double(const VectorXd&)>* payoff_override =
                                nullptr);

/// Sup-norm and mean-absolute error between two grids of values.
std::pair<double, double> error_norms(const std::vector<double>& computed,
                                      const std::vector<double>& reference);

}  // namespace maxquad
