#pragma once

#include <optional>
#include <string>
#include <vector>

#include "maxquad/oracle.hpp"
#include "maxquad/solver.hpp"

namespace maxquad {

/// Evaluation slice: xi2 fixed, xi1 swept with a uniform step.
struct EvalGrid {
  double xi1_lo = 20.0;
  double xi1_hi = 80.0;
  double xi1_step = 1.0;
  double xi2 = 50.0;

  int size() const;
  VectorXd point(int i) const;
};

struct BenchmarkCase {
  std::string label;
  std::vector<int> mode_indices;  // subset of spec.modes; singleton gets oracle norms
  SamplePlan plan;
  uint64_t seed = 0;
  EvalGrid grid;
};

struct BenchmarkCaseResult {
  std::string label;
  std::string mode_desc;
  SamplePlan plan;
  bool ok = false;
  std::string error;
  std::vector<double> values;  // v(0, x) on the grid
  std::optional<double> e_inf, e_1;
  int max_cardinality = 0;
  int cardinality_bound = 0;
  double wall_s = 0.0;
};

struct BenchmarkReport {
  EvalGrid grid;
  std::vector<BenchmarkCaseResult> cases;
};

/// Restrict a spec to a subset of its modes (terminal and payoff shared).
ProblemSpec restrict_modes(const ProblemSpec& spec, const std::vector<int>& mode_indices);

/// Solve every case and attach oracle error norms to the single-mode ones.
/// Case failures are recorded and do not stop the run.
BenchmarkReport run_benchmark(const ProblemSpec& spec,
                              const std::vector<BenchmarkCase>& cases,
                              const SolveOptions& options, int oracle_nodes = 64);

/// The canonical experiment: each mode alone plus the controlled problem.
std::vector<BenchmarkCase> standard_cases(const ProblemSpec& spec, const SamplePlan& plan,
                                          uint64_t seed, const EvalGrid& grid);

/// case id, mode set, sample sizes, error norms, wall-clock.
std::string table_csv(const BenchmarkReport& report);

/// xi1 column plus one value column per case (v_<label>).
std::string figure_csv(const BenchmarkReport& report);

/// Oracle values on the grid for one mode.
std::vector<double> oracle_grid(const ProblemSpec& spec, const ControlMode& mode,
                                const EvalGrid& grid, int n_nodes,
                                std::optional<double> horizon = {});

/// Per-point sample standard deviation across repeated curves (seed spread).
std::vector<double> pointwise_stddev(const std::vector<std::vector<double>>& curves);

}  // namespace maxquad
