#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "maxquad/model.hpp"
#include "maxquad/regression.hpp"
#include "maxquad/sampling.hpp"

namespace maxquad {

struct SolveOptions {
  int threads = 0;
  bool moment_match = true;      // antithetic + second-moment rescale per group
  bool enforce_concavity = true; // project fitted forms onto concave triples
  double eta_min = 0.0;          // 0 keeps the semidefinite clamp
  double ridge = 0.0;            // regression ridge strength
  double prune_tol = 0.0;        // duplicate-removal tolerance per step
};

struct StepDiagnostics {
  int t_index = 0;
  int cardinality = 0;                  // card Z_t after duplicate removal
  double max_concavity_clamp = 0.0;     // largest eigenvalue clamp applied
  int underdetermined_fits = 0;
  double selection_distinct_mean = 0.0; // distinct forms per selection, averaged
  double wall_ms = 0.0;
};

/// Backward-induction output: the form sets Z_t for every discretization time
/// (levels[i] at t = i h, with the last level the terminal input) plus
/// per-step diagnostics. card Z_t <= modes * N_in holds at every step.
struct SolveResult {
  ProblemSpec spec;
  SamplePlan plan;
  uint64_t seed = 0;
  SolveOptions options;
  std::vector<MaxPlusFunction> levels;
  std::vector<std::vector<int>> mode_of_form;  // -1 marks terminal forms
  std::vector<StepDiagnostics> steps;          // ascending t order
  PathDiagnostics paths;
  double wall_ms_total = 0.0;

  int max_cardinality() const;
};

/// Runs the full backward induction. Deterministic for fixed
/// (spec, plan, seed) regardless of thread count.
SolveResult backward_solve(const ProblemSpec& spec, const SamplePlan& plan, uint64_t seed,
                           const SolveOptions& options = {});

/// max over Z_t of q(x, z); t must be a discretization time.
double evaluate_value(const SolveResult& result, double t, const VectorXd& x);

/// CSV of every level's forms (t, mode_label, triple columns).
void write_value_forms_csv(std::ostream& os, const SolveResult& result);

/// Flat key=value run manifest; extra entries are appended verbatim.
void write_manifest(std::ostream& os, const SolveResult& result,
                    const std::map<std::string, std::string>& extra = {});

}  // namespace maxquad
