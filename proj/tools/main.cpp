#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "maxquad/config.hpp"
#include "maxquad/parallel.hpp"
#include "maxquad/util.hpp"

namespace fs = std::filesystem;
using namespace maxquad;

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out_dir;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("config", flags.config_path, "path to the INI config (optional keys)")
      ->required();
  cmd->add_option("--seed", flags.seed, "override [run] seed");
  cmd->add_option("--threads", flags.threads, "override thread count");
  cmd->add_option("--out-dir", flags.out_dir, "override [run] out_dir");
}

// Precedence: --threads flag > config value > MAXQUAD_THREADS > hardware.
int pick_threads(const CommonFlags& flags, const RunConfig& config) {
  if (flags.threads) return *flags.threads;
  if (config.run.threads > 0) return config.run.threads;
  if (const char* env = std::getenv("MAXQUAD_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (...) {
    }
  }
  return 0;  // auto
}

RunConfig load(const CommonFlags& flags) {
  RunConfig config = parse_config_file(flags.config_path);
  if (flags.seed) config.run.seed = *flags.seed;
  if (flags.out_dir) config.run.out_dir = *flags.out_dir;
  config.run.threads = pick_threads(flags, config);
  config.run.solve.threads = config.run.threads;
  return config;
}

fs::path ensure_out_dir(const RunConfig& config) {
  fs::path dir(config.run.out_dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
}

int cmd_solve(const CommonFlags& flags, bool dump_paths_flag) {
  RunConfig config = load(flags);
  const fs::path dir = ensure_out_dir(config);

  const SolveResult result =
      backward_solve(config.spec, config.plan, config.run.seed, config.run.solve);

  std::ostringstream forms;
  write_value_forms_csv(forms, result);
  write_file(dir / "value_forms.csv", forms.str());

  std::ostringstream manifest;
  write_manifest(manifest, result,
                 {{"config_hash", std::to_string(config_hash(config))},
                  {"payoff_achieved_eps", format_double(config.payoff_achieved_eps)}});
  write_file(dir / "manifest.txt", manifest.str());

  if (dump_paths_flag || config.run.dump_paths) {
    const PathTable table = simulate_paths(config.spec, config.plan, config.run.seed,
                                           {config.run.threads, false});
    std::ostringstream paths;
    write_paths_csv(paths, table);
    write_file(dir / "paths.csv", paths.str());
  }

  std::cout << "solve: wrote " << (dir / "value_forms.csv").string() << " ("
            << result.max_cardinality() << " forms max, "
            << format_double(result.wall_ms_total / 1000.0) << " s)\n";
  return 0;
}

int cmd_benchmark(const CommonFlags& flags) {
  RunConfig config = load(flags);
  const fs::path dir = ensure_out_dir(config);

  const auto cases =
      standard_cases(config.spec, config.plan, config.run.seed, config.run.grid);
  const BenchmarkReport report =
      run_benchmark(config.spec, cases, config.run.solve, config.run.oracle_nodes);

  write_file(dir / "table.csv", table_csv(report));
  write_file(dir / "figure.csv", figure_csv(report));

  std::ostringstream manifest;
  manifest << "config_hash=" << config_hash(config) << '\n';
  manifest << "seed=" << config.run.seed << '\n';
  for (const auto& entry : report.cases) {
    manifest << "case." << entry.label << ".status=" << (entry.ok ? "ok" : "failed")
             << '\n';
    if (!entry.ok) manifest << "case." << entry.label << ".error=" << entry.error << '\n';
    manifest << "case." << entry.label << ".wall_s=" << format_double(entry.wall_s)
             << '\n';
  }
  write_file(dir / "manifest.txt", manifest.str());

  std::cout << table_csv(report);
  bool all_ok = true;
  for (const auto& entry : report.cases) all_ok = all_ok && entry.ok;
  if (!all_ok) {
    std::cerr << "error: benchmark: at least one case failed (see table.csv)\n";
    return 1;
  }
  return 0;
}

int cmd_oracle(const CommonFlags& flags, double rho, int nodes) {
  RunConfig config = load(flags);
  const fs::path dir = ensure_out_dir(config);

  // Prefer a configured mode with this rho; otherwise build one from the
  // first mode's volatilities.
  std::optional<ControlMode> mode;
  for (const auto& m : config.spec.modes)
    if (m.lognormal && m.lognormal->rho == rho) mode = m;
  if (!mode) {
    for (const auto& m : config.spec.modes)
      if (m.lognormal) {
        mode = make_lognormal_mode("rho=" + format_double(rho), m.lognormal->sigma1,
                                   m.lognormal->sigma2, rho);
        break;
      }
  }
  if (!mode)
    throw std::runtime_error("oracle: no lognormal mode in the configuration");

  const int n = nodes > 0 ? nodes : config.run.oracle_nodes;
  const std::vector<double> values =
      oracle_grid(config.spec, *mode, config.run.grid, n);

  std::ostringstream os;
  os << "xi1,value\n";
  for (int i = 0; i < config.run.grid.size(); ++i)
    os << format_double(config.run.grid.point(i)[0]) << ','
       << format_double(values[size_t(i)]) << '\n';
  const fs::path path = dir / ("oracle_rho_" + format_double(rho) + ".csv");
  write_file(path, os.str());
  std::cout << "oracle: wrote " << path.string() << " (" << n << " nodes per axis)\n";
  return 0;
}

int cmd_dump_payoff(const CommonFlags& flags) {
  RunConfig config = load(flags);
  const fs::path dir = ensure_out_dir(config);
  if (!config.spec.exact_payoff)
    throw std::runtime_error("dump-payoff: configuration has no ridge payoff");
  const RidgePayoff& payoff = *config.spec.exact_payoff;
  const PackedForms packed(config.spec.terminal);

  // Scan along the ridge line: xi = s * u0 / |u0|^2 so that u0 . xi = s.
  std::ostringstream os;
  os << "s,psi,approx\n";
  const double lo = config.payoff.approx.band_lo, hi = config.payoff.approx.band_hi;
  const int n_scan = 2001;
  std::vector<double> phi(size_t(monomial_count(config.spec.dim)));
  std::vector<double> scratch;
  for (int i = 0; i < n_scan; ++i) {
    const double s = lo + (hi - lo) * double(i) / double(n_scan - 1);
    const VectorXd xi = s * payoff.direction / payoff.direction.squaredNorm();
    fill_monomials(xi, phi.data());
    os << format_double(s) << ',' << format_double(payoff(xi)) << ','
       << format_double(packed.sup(phi.data(), scratch).value) << '\n';
  }
  write_file(dir / "payoff.csv", os.str());

  std::ostringstream report;
  report << "n_forms=" << config.spec.terminal.size() << '\n';
  report << "achieved_eps=" << format_double(config.payoff_achieved_eps) << '\n';
  report << "target_eps=" << format_double(config.payoff.approx.target_eps) << '\n';
  write_file(dir / "payoff_report.txt", report.str());

  std::cout << "dump-payoff: achieved ridge error "
            << format_double(config.payoff_achieved_eps) << " (target "
            << format_double(config.payoff.approx.target_eps) << "), "
            << config.spec.terminal.size() << " forms\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"max-plus quadratic-form solver for switching-diffusion HJB problems"};
  app.require_subcommand(1);

  CommonFlags solve_flags, bench_flags, oracle_flags, payoff_flags;
  bool dump_paths = false;
  double rho = 0.8;
  int nodes = 0;

  CLI::App* solve = app.add_subcommand("solve", "run the backward solver");
  add_common(solve, solve_flags);
  solve->add_flag("--dump-paths", dump_paths, "also write the simulated path table");

  CLI::App* bench = app.add_subcommand(
      "benchmark", "single-mode error tables and the controlled value curve");
  add_common(bench, bench_flags);

  CLI::App* oracle =
      app.add_subcommand("oracle", "quadrature reference values on the grid");
  add_common(oracle, oracle_flags);
  oracle->add_option("--rho", rho, "correlation of the constant mode")->required();
  oracle->add_option("--nodes", nodes, "quadrature nodes per axis");

  CLI::App* payoff =
      app.add_subcommand("dump-payoff", "terminal payoff approximation and its error");
  add_common(payoff, payoff_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(solve_flags, dump_paths);
    if (bench->parsed()) return cmd_benchmark(bench_flags);
    if (oracle->parsed()) return cmd_oracle(oracle_flags, rho, nodes);
    if (payoff->parsed()) return cmd_dump_payoff(payoff_flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
