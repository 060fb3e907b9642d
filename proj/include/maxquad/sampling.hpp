#pragma once

#include <cstdint>
#include <ostream>
#include <utility>
#include <vector>

#include "maxquad/model.hpp"
#include "maxquad/rng.hpp"

namespace maxquad {

/// The five regression-pair sampling methods.
enum class SamplingMethod : int {
  initial = 1,             // pairs (i, i) over the initial sample
  shared_product = 2,      // one random state/increment subset shared by all (omega, m)
  independent_product = 3, // fresh random subsets per (omega, m)
  states_by_all = 4,       // random states crossed with every increment
  full_product = 5,        // the full product of the initial sample with itself
};

/// Sample-size 5-uple (N_in, N_rg, N_x, N_w, method).
struct SamplePlan {
  int n_init = 1000;   // N_in
  int n_reg = 10000;   // N_rg
  int n_states = 10;   // N_x
  int n_incr = 1000;   // N_w
  SamplingMethod method = SamplingMethod::shared_product;

  /// Throws naming the violated invariant (prefix for config error messages).
  void validate(const std::string& context = "sampling") const;
};

struct PathDiagnostics {
  int guard_clamped = 0;          // simulated points clamped into the guard box
  double worst_mean_ratio = 0.0;  // max over (t,k) of |mean dW| / (5 sqrt(h/N))
  bool increment_mean_ok = true;
};

/// Simulated Euler states per mode plus the shared Brownian increments.
/// One increment stream drives every mode; the forward recursion
/// state(m, t+1, omega) = euler_step(m, ..., state(m, t, omega), increment(t, omega))
/// holds bit-for-bit except where the guard box clamped a coordinate.
class PathTable {
 public:
  PathTable(int n_modes, int n_steps, int n_samples, int dim);

  const VectorXd& state(int mode, int t_index, int omega) const {
    return states_[size_t(mode)][size_t(t_index) * size_t(n_samples_) + size_t(omega)];
  }
  const VectorXd& increment(int t_index, int omega) const {
    return increments_[size_t(t_index) * size_t(n_samples_) + size_t(omega)];
  }
  VectorXd& state(int mode, int t_index, int omega) {
    return states_[size_t(mode)][size_t(t_index) * size_t(n_samples_) + size_t(omega)];
  }
  VectorXd& increment(int t_index, int omega) {
    return increments_[size_t(t_index) * size_t(n_samples_) + size_t(omega)];
  }

  int n_modes() const { return n_modes_; }
  int n_steps() const { return n_steps_; }
  int n_samples() const { return n_samples_; }
  int dim() const { return dim_; }

  PathDiagnostics diagnostics;

 private:
  int n_modes_, n_steps_, n_samples_, dim_;
  std::vector<VectorXd> increments_;               // [t * n + omega]
  std::vector<std::vector<VectorXd>> states_;      // [mode][t * n + omega]
};

struct SimulateOptions {
  int threads = 0;
  bool zero_increments = false;  // test hook: freeze the Brownian driver
};

/// Draw initial states uniformly over the state box (shared across modes),
/// increments ~ Normal(0, h I), then fill the forward Euler recursion.
/// Fully deterministic given the seed; parallel over omega.
PathTable simulate_paths(const ProblemSpec& spec, const SamplePlan& plan, uint64_t seed,
                         const SimulateOptions& options = {});

/// Debug dump: columns m, t, omega, x..., dw... (dw empty on the last level).
void write_paths_csv(std::ostream& os, const PathTable& table);

/// Identifies one (t, omega, m) slot of the backward loop for pair drawing.
struct PairContext {
  uint64_t seed = 0;
  int t_index = 0;
  int omega = 0;
  int mode = 0;
};

/// Compact product description of the regression pair sample.
struct PairDraw {
  std::vector<int> states;      // indices into the initial sample
  std::vector<int> increments;  // indices into the initial sample
  bool product = true;          // true: pairs = states x increments (row-major)
};

PairDraw draw_pair_plan(const SamplePlan& plan, const PairContext& ctx);

/// Explicit pair list (omega_i, omega'_i), 0-based. Methods 2/4 reuse one
/// global draw per solve; method 3 redraws per (t, omega, m).
std::vector<std::pair<int, int>> build_pairs(const SamplePlan& plan, const PairContext& ctx);

}  // namespace maxquad
