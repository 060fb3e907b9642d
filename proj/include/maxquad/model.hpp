#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "maxquad/payoff.hpp"
#include "maxquad/quadform.hpp"

namespace maxquad {

/// x -> A x + b.
struct AffineMap {
  MatrixXd A;
  VectorXd b;

  VectorXd operator()(const VectorXd& x) const { return A * x + b; }
  bool is_zero() const { return A.isZero(0.0) && b.isZero(0.0); }
  static AffineMap zero(int dim) {
    return {MatrixXd::Zero(dim, dim), VectorXd::Zero(dim)};
  }
};

/// Matrix map x -> S0 + sum_k x_k S_k (every entry affine in x).
struct AffineMatrixMap {
  MatrixXd constant;
  std::vector<MatrixXd> per_coord;  // one d x d matrix per coordinate

  MatrixXd operator()(const VectorXd& x) const;
  int dim() const { return int(constant.rows()); }
  static AffineMatrixMap constant_map(MatrixXd s0);
};

/// Marker for the two-asset lognormal family sigma(xi) =
/// [[s1 xi1, 0], [s2 rho xi2, s2 sqrt(1-rho^2) xi2]]; lets the oracle use the
/// exact distribution of the mode's terminal state.
struct LognormalTag {
  double sigma1, sigma2, rho;
};

using GeneratorHook =
    std::function<double(const VectorXd& x, double r, const VectorXd& p, const MatrixXd& gamma)>;

/// One switching mode: dynamics, discounting and running reward.
struct ControlMode {
  std::string label;
  AffineMap drift;           // f (state/time)
  AffineMatrixMap diffusion;  // sigma (state/sqrt(time))
  double discount = 0.0;      // constant per mode (1/time)
  std::optional<QuadraticForm> running_reward;  // absent means 0
  std::optional<LognormalTag> lognormal;
  GeneratorHook custom_generator;  // optional override of the proportional split

  int dim() const { return diffusion.dim(); }
};

ControlMode make_lognormal_mode(const std::string& label, double sigma1, double sigma2,
                                double rho);

struct Interval {
  double lo = 0.0, hi = 0.0;
};

/// Full problem description consumed by the solver.
struct ProblemSpec {
  int dim = 0;
  double horizon = 0.0;  // T
  double step = 0.0;     // h, with T/h integer
  double epsilon = 1.0;  // diffusion split parameter in (0, 1]
  std::vector<ControlMode> modes;
  MaxPlusFunction terminal;             // the approximation of the terminal payoff
  std::vector<Interval> state_box;      // initial-state sampling box
  std::optional<std::vector<Interval>> guard_box;  // simulation clamp box
  std::optional<RidgePayoff> exact_payoff;         // reference payoff for oracles
  std::optional<Interval> payoff_band;             // slab where terminal approximates psi

  int num_steps() const;
};

/// One Euler transition x + f(x) h + eps sigma(x) w. Affine in x for fixed w.
VectorXd euler_step(const ControlMode& mode, double epsilon, double h, const VectorXd& x,
                    const VectorXd& w);

/// Nonlinear remainder of the proportional Hamiltonian split:
/// (1-eps^2)/2 tr(sigma sigma' Gamma) - discount r + reward(x).
/// A mode's custom_generator, when set, replaces this formula.
double nonlinear_generator(const ControlMode& mode, double epsilon, const VectorXd& x,
                           double r, const VectorXd& p, const MatrixXd& gamma);

struct SplitReport {
  bool ok = false;
  double trace_value = 0.0;  // d (1-eps^2) / (2 eps^2), must be <= 1
  double margin = 0.0;
  std::vector<double> sigma_condition;  // worst condition number per mode
  std::vector<std::string> issues;

  std::string summary() const;
};

/// Checks the split admissibility condition, epsilon range, T/h integrality
/// and diffusion invertibility over the state box (corners and center).
SplitReport validate_split(const ProblemSpec& spec);

}  // namespace maxquad
