#pragma once

#include <optional>
#include <vector>

#include "maxquad/quadform.hpp"

namespace maxquad {

/// Continuous piecewise-linear profile g: breakpoints with values, plus the
/// slopes of the two unbounded end pieces.
struct PiecewiseLinear {
  std::vector<double> breaks;  // strictly increasing, nonempty
  std::vector<double> values;  // g(breaks[k])
  double slope_left = 0.0;     // slope for s < breaks.front()
  double slope_right = 0.0;    // slope for s > breaks.back()

  double operator()(double s) const;

  /// Slope of g immediately to the left of s (one-sided derivative).
  double slope_left_of(double s) const;

  /// Breakpoints where the slope actually jumps.
  std::vector<double> kinks() const;

  /// Clamped call spread: (s - k1)^+ - (s - k2)^+ with k1 < k2.
  static PiecewiseLinear butterfly(double k1, double k2);
};

/// Payoff of ridge type psi(xi) = g(u0 . xi).
struct RidgePayoff {
  VectorXd direction;  // u0 (not necessarily unit length)
  PiecewiseLinear profile;

  double operator()(const VectorXd& xi) const;
  int dim() const { return int(direction.size()); }
};

struct PayoffApproxParams {
  double band_lo = -100.0;  // slab in s = u0 . xi where the bound must hold
  double band_hi = 100.0;
  int n_forms = 1000;
  double kink_curvature = 10.0;        // ridge curvature at kink anchors
  double transverse_curvature = 1e-8;  // curvature orthogonal to the ridge
  double target_eps = 0.06;            // required sup error on the ridge
  // Ridge curvature for anchors on the linear pieces; unset = kink_curvature.
  // Flat-piece tangents only need enough curvature to die off before they
  // overshoot another piece, and every unit of terminal curvature is inherited
  // by the solver's propagated forms, so small values pay off downstream.
  std::optional<double> piece_curvature;

  double curvature_at(bool is_kink) const {
    return is_kink ? kink_curvature : piece_curvature.value_or(kink_curvature);
  }
};

struct PayoffApproxResult {
  MaxPlusFunction forms;
  double achieved_eps;           // max ridge gap psi - sup on a dense 1-D scan
  std::vector<double> anchors;   // anchor values of s, ascending
};

/// Under-approximate a ridge payoff by n_forms concave quadratics: one
/// parabola per anchor, tangent with the left one-sided slope, shifted down
/// by its exact overshoot so sup <= psi holds on the whole slab. Off the
/// ridge line each form additionally loses transverse_curvature/2 * dist^2.
/// Throws (naming the achieved error) when the dense ridge scan exceeds
/// target_eps.
PayoffApproxResult approximate_payoff(const RidgePayoff& payoff,
                                      const PayoffApproxParams& params);

}  // namespace maxquad
