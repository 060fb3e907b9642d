#include "maxquad/benchmark.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "maxquad/util.hpp"

namespace maxquad {

int EvalGrid::size() const {
  if (!(xi1_step > 0.0) || xi1_hi < xi1_lo)
    throw std::invalid_argument("EvalGrid: empty or inverted grid");
  return int(std::floor((xi1_hi - xi1_lo) / xi1_step + 1e-9)) + 1;
}

VectorXd EvalGrid::point(int i) const {
  VectorXd x(2);
  x[0] = xi1_lo + double(i) * xi1_step;
  x[1] = xi2;
  return x;
}

ProblemSpec restrict_modes(const ProblemSpec& spec, const std::vector<int>& mode_indices) {
  if (mode_indices.empty())
    throw std::invalid_argument("restrict_modes: empty mode subset");
  ProblemSpec sub = spec;
  sub.modes.clear();
  for (const int m : mode_indices) {
    if (m < 0 || m >= int(spec.modes.size()))
      throw std::invalid_argument("restrict_modes: mode index out of range");
    sub.modes.push_back(spec.modes[size_t(m)]);
  }
  return sub;
}

std::vector<double> oracle_grid(const ProblemSpec& spec, const ControlMode& mode,
                                const EvalGrid& grid, int n_nodes,
                                std::optional<double> horizon) {
  std::vector<double> values(size_t(grid.size()));
  for (int i = 0; i < grid.size(); ++i)
    values[size_t(i)] = oracle_constant_mode(spec, mode, grid.point(i), n_nodes, horizon);
  return values;
}

BenchmarkReport run_benchmark(const ProblemSpec& spec,
                              const std::vector<BenchmarkCase>& cases,
                              const SolveOptions& options, int oracle_nodes) {
  BenchmarkReport report;
  if (!cases.empty()) report.grid = cases.front().grid;

  for (const auto& bench : cases) {
    BenchmarkCaseResult entry;
    entry.label = bench.label;
    entry.plan = bench.plan;
    const auto start = std::chrono::steady_clock::now();
    try {
      // case invariant: the grid must sit inside the payoff-approximation band
      if (spec.exact_payoff && spec.payoff_band) {
        for (const int i : {0, bench.grid.size() - 1}) {
          const double s = spec.exact_payoff->direction.dot(bench.grid.point(i));
          if (s < spec.payoff_band->lo || s > spec.payoff_band->hi)
            throw std::invalid_argument(
                "evaluation grid leaves the payoff-approximation band");
        }
      }
      const ProblemSpec sub = restrict_modes(spec, bench.mode_indices);
      std::ostringstream desc;
      for (size_t i = 0; i < sub.modes.size(); ++i)
        desc << (i ? "+" : "") << sub.modes[i].label;
      entry.mode_desc = desc.str();

      const SolveResult solved = backward_solve(sub, bench.plan, bench.seed, options);
      entry.max_cardinality = solved.max_cardinality();
      entry.cardinality_bound = int(sub.modes.size()) * bench.plan.n_init;

      entry.values.resize(size_t(bench.grid.size()));
      for (int i = 0; i < bench.grid.size(); ++i)
        entry.values[size_t(i)] = evaluate_value(solved, 0.0, bench.grid.point(i));

      if (sub.modes.size() == 1 && sub.modes[0].lognormal) {
        const std::vector<double> reference =
            oracle_grid(sub, sub.modes[0], bench.grid, oracle_nodes);
        const auto [sup, mean] = error_norms(entry.values, reference);
        entry.e_inf = sup;
        entry.e_1 = mean;
      }
      entry.ok = true;
    } catch (const std::exception& e) {
      entry.ok = false;
      entry.error = e.what();
    }
    entry.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                       .count();
    report.cases.push_back(std::move(entry));
  }
  return report;
}

std::vector<BenchmarkCase> standard_cases(const ProblemSpec& spec, const SamplePlan& plan,
                                          uint64_t seed, const EvalGrid& grid) {
  std::vector<BenchmarkCase> cases;
  for (int m = 0; m < int(spec.modes.size()); ++m) {
    std::string label = spec.modes[size_t(m)].label;
    for (char& ch : label)
      if (ch == ',' || ch == ' ') ch = '_';
    cases.push_back({label, {m}, plan, seed, grid});
  }
  if (spec.modes.size() > 1) {
    std::vector<int> all(spec.modes.size());
    for (int m = 0; m < int(spec.modes.size()); ++m) all[size_t(m)] = m;
    cases.push_back({"controlled", all, plan, seed, grid});
  }
  return cases;
}

std::string table_csv(const BenchmarkReport& report) {
  std::ostringstream os;
  os << "case,modes,N_in,N_rg,N_x,N_w,method,e_inf,e_1,max_card,card_bound,status\n";
  for (const auto& entry : report.cases) {
    os << entry.label << ',' << entry.mode_desc << ',' << entry.plan.n_init << ','
       << entry.plan.n_reg << ',' << entry.plan.n_states << ',' << entry.plan.n_incr
       << ',' << int(entry.plan.method) << ',';
    if (entry.e_inf) os << format_double(*entry.e_inf);
    os << ',';
    if (entry.e_1) os << format_double(*entry.e_1);
    os << ',' << entry.max_cardinality << ',' << entry.cardinality_bound << ','
       << (entry.ok ? "ok" : "failed") << '\n';
  }
  return os.str();
}

std::string figure_csv(const BenchmarkReport& report) {
  std::ostringstream os;
  os << "xi1";
  for (const auto& entry : report.cases) os << ",v_" << entry.label;
  os << '\n';
  const int n = report.grid.size();
  for (int i = 0; i < n; ++i) {
    os << format_double(report.grid.point(i)[0]);
    for (const auto& entry : report.cases) {
      os << ',';
      if (entry.ok && i < int(entry.values.size()))
        os << format_double(entry.values[size_t(i)]);
    }
    os << '\n';
  }
  return os.str();
}

std::vector<double> pointwise_stddev(const std::vector<std::vector<double>>& curves) {
  if (curves.size() < 2)
    throw std::invalid_argument("pointwise_stddev: need at least two curves");
  const size_t n = curves.front().size();
  for (const auto& curve : curves)
    if (curve.size() != n) throw std::invalid_argument("pointwise_stddev: ragged curves");
  std::vector<double> out(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (const auto& curve : curves) mean += curve[i];
    mean /= double(curves.size());
    double var = 0.0;
    for (const auto& curve : curves) var += (curve[i] - mean) * (curve[i] - mean);
    out[i] = std::sqrt(var / double(curves.size() - 1));
  }
  return out;
}

}  // namespace maxquad
