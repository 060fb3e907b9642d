#pragma once

#include <cstdint>
#include <string>

#include "maxquad/benchmark.hpp"
#include "maxquad/payoff.hpp"
#include "maxquad/sampling.hpp"
#include "maxquad/solver.hpp"

namespace maxquad {

struct PayoffConfig {
  double k1 = -5.0;
  double k2 = 5.0;
  VectorXd direction;  // ridge direction u0
  PayoffApproxParams approx;
};

struct RunOptions {
  uint64_t seed = 12345;
  int threads = 0;  // 0: MAXQUAD_THREADS env var if set, else hardware
  std::string out_dir = "out";
  bool dump_paths = false;
  int oracle_nodes = 64;
  EvalGrid grid;
  SolveOptions solve;
};

/// Everything a CLI run needs: the built problem, the sampling plan and the
/// run options, plus the payoff construction echo for serialization.
struct RunConfig {
  ProblemSpec spec;
  SamplePlan plan;
  RunOptions run;
  PayoffConfig payoff;
  double payoff_achieved_eps = 0.0;
};

/// Built-in defaults: the two-asset uncertain-correlation experiment
/// (sigma1=0.4, sigma2=0.3, rho in {-0.8, 0.8}, butterfly K1=-5, K2=5,
/// T=0.25, h=0.05, epsilon=0.75). An empty config file yields exactly this.
RunConfig default_config();

/// Flat INI config: sections [problem], [mode.<label>], [payoff], [sampling],
/// [run]. Unknown sections or keys are rejected; every violated invariant is
/// reported with its section and key.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

/// Canonical text form; parse(serialize(c)) reproduces the same hash.
std::string serialize_config(const RunConfig& config);
uint64_t config_hash(const RunConfig& config);

}  // namespace maxquad
