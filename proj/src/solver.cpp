#include "maxquad/solver.hpp"

#include <chrono>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "maxquad/parallel.hpp"
#include "maxquad/scheme.hpp"
#include "maxquad/util.hpp"

namespace maxquad {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point from) {
  return std::chrono::duration<double, std::milli>(Clock::now() - from).count();
}

// Unique indices with multiplicities, ascending-index order.
struct UniqueCounts {
  std::vector<int> index;
  std::vector<int> count;
};

UniqueCounts unique_counts(const std::vector<int>& draws, int n_init) {
  UniqueCounts out;
  std::vector<int> counts(size_t(n_init), 0);
  for (const int i : draws) ++counts[size_t(i)];
  for (int i = 0; i < n_init; ++i)
    if (counts[size_t(i)] > 0) {
      out.index.push_back(i);
      out.count.push_back(counts[size_t(i)]);
    }
  return out;
}

std::vector<WeightedIncrement> gather_increments(const PathTable& table, int t,
                                                 const UniqueCounts& uc) {
  std::vector<WeightedIncrement> incs;
  incs.reserve(uc.index.size());
  for (size_t j = 0; j < uc.index.size(); ++j)
    incs.push_back({table.increment(t, uc.index[j]), double(uc.count[j])});
  return incs;
}

int distinct_count(const std::vector<int>& form_index, int n_forms) {
  std::vector<char> seen(size_t(n_forms), 0);
  int distinct = 0;
  for (const int f : form_index)
    if (!seen[size_t(f)]) {
      seen[size_t(f)] = 1;
      ++distinct;
    }
  return distinct;
}

double eigen_clamp_excess(const QuadraticForm& q, double eta_min) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(q.Q, Eigen::EigenvaluesOnly);
  return std::max(0.0, es.eigenvalues().maxCoeff() + eta_min);
}

struct SlotOutput {
  QuadraticForm form;
  double clamp = 0.0;
  bool underdetermined = false;
  int selection_distinct = 0;
};

}  // namespace

int SolveResult::max_cardinality() const {
  int worst = 0;
  for (const auto& s : steps) worst = std::max(worst, s.cardinality);
  return worst;
}

SolveResult backward_solve(const ProblemSpec& spec, const SamplePlan& plan, uint64_t seed,
                           const SolveOptions& options) {
  const auto start = Clock::now();
  plan.validate();
  const SplitReport split = validate_split(spec);
  if (!split.ok)
    throw std::invalid_argument("backward_solve: invalid problem\n" + split.summary());

  const int n_steps = spec.num_steps();
  const int n_modes = int(spec.modes.size());
  const int n_init = plan.n_init;
  const int64_t card_bound = int64_t(n_modes) * int64_t(n_init);
  if (spec.terminal.size() > card_bound)
    throw std::invalid_argument(
        "backward_solve: terminal set exceeds the cardinality bound modes * N_in (" +
        std::to_string(spec.terminal.size()) + " > " + std::to_string(card_bound) + ")");

  const PathTable table = simulate_paths(spec, plan, seed, {options.threads, false});

  std::vector<std::optional<MaxPlusFunction>> levels(size_t(n_steps) + 1);
  std::vector<std::vector<int>> mode_of(size_t(n_steps) + 1);
  levels[size_t(n_steps)] = spec.terminal;
  mode_of[size_t(n_steps)].assign(size_t(spec.terminal.size()), -1);

  std::vector<StepDiagnostics> diagnostics;
  const bool shared_draw_methods = plan.method == SamplingMethod::shared_product ||
                                   plan.method == SamplingMethod::states_by_all ||
                                   plan.method == SamplingMethod::full_product;

  for (int t = n_steps - 1; t >= 0; --t) {
    const auto step_start = Clock::now();
    const PackedForms packed(*levels[size_t(t) + 1]);

    // For the shared-draw methods the pair indices (hence the moment-matched
    // increment set) are identical for every (omega, m) of the step.
    std::optional<PairDraw> shared_draw;
    std::vector<WeightedIncrement> shared_incs;
    if (shared_draw_methods) {
      shared_draw = draw_pair_plan(plan, {seed, t, 0, 0});
      const UniqueCounts uc = unique_counts(shared_draw->increments, n_init);
      std::vector<WeightedIncrement> raw = gather_increments(table, t, uc);
      shared_incs =
          options.moment_match ? moment_match(raw, spec.step, true) : std::move(raw);
    }

    std::vector<SlotOutput> slots(static_cast<size_t>(card_bound));
    parallel_for(int(card_bound), options.threads, [&](int slot_id) {
      const int m = slot_id / n_init;
      const int omega = slot_id % n_init;
      const ControlMode& mode = spec.modes[size_t(m)];
      try {
        const PairDraw draw = shared_draw
                                  ? *shared_draw
                                  : draw_pair_plan(plan, {seed, t, omega, m});

        // Selection anchored at the outer state; one shared list of
        // moment-matched increments for the product methods, per-state
        // antithetic pairs for the diagonal method.
        std::vector<WeightedIncrement> incs;
        std::vector<int> group_begin;  // per group: first index into incs
        std::vector<int> group_end;
        std::vector<int> group_state;
        if (draw.product) {
          if (shared_draw)
            incs = shared_incs;
          else {
            const UniqueCounts uc = unique_counts(draw.increments, n_init);
            incs = options.moment_match
                       ? moment_match(gather_increments(table, t, uc), spec.step, true)
                       : gather_increments(table, t, uc);
          }
          const int n_inc = int(incs.size());
          if (plan.method == SamplingMethod::full_product ||
              plan.method == SamplingMethod::states_by_all ||
              plan.method == SamplingMethod::initial) {
            // states are already distinct by construction
            for (const int s : draw.states) {
              group_state.push_back(s);
              group_begin.push_back(0);
              group_end.push_back(n_inc);
            }
          } else {
            for (size_t i = 0; i < draw.states.size(); ++i) {
              bool first = true;
              for (size_t k = 0; k < i; ++k)
                if (draw.states[k] == draw.states[i]) {
                  first = false;
                  break;
                }
              if (!first) continue;
              group_state.push_back(draw.states[i]);
              group_begin.push_back(0);
              group_end.push_back(n_inc);
            }
          }
        } else {
          // diagonal pairing: one group per initial sample, increments own
          for (size_t i = 0; i < draw.states.size(); ++i) {
            std::vector<WeightedIncrement> own{
                {table.increment(t, draw.increments[i]), 1.0}};
            if (options.moment_match) own = moment_match(own, spec.step, true);
            group_state.push_back(draw.states[i]);
            group_begin.push_back(int(incs.size()));
            for (auto& inc : own) incs.push_back(std::move(inc));
            group_end.push_back(int(incs.size()));
          }
        }

        SelectionMap selection =
            build_selection(packed, mode, spec.epsilon, spec.step,
                            table.state(m, t, omega), std::move(incs));
        selection.owner_omega = omega;
        selection.owner_mode = m;
        selection.owner_t = t;

        // Per-group operator values at the regression states.
        std::vector<double> group_value(group_state.size());
        for (size_t g = 0; g < group_state.size(); ++g) {
          const VectorXd& x_g = table.state(m, t, group_state[g]);
          if (group_begin[g] == 0 && group_end[g] == selection.size()) {
            group_value[g] =
                apply_operator(mode, spec.epsilon, spec.step, x_g, selection, packed);
          } else {
            SelectionMap sub;
            sub.increments.assign(selection.increments.begin() + group_begin[g],
                                  selection.increments.begin() + group_end[g]);
            sub.form_index.assign(selection.form_index.begin() + group_begin[g],
                                  selection.form_index.begin() + group_end[g]);
            group_value[g] =
                apply_operator(mode, spec.epsilon, spec.step, x_g, sub, packed);
          }
        }

        // Regression sample: one point per drawn state (duplicates reweight).
        std::vector<int> group_of(size_t(n_init), -1);
        for (size_t g = 0; g < group_state.size(); ++g)
          group_of[size_t(group_state[g])] = int(g);
        std::vector<VectorXd> xs;
        std::vector<double> ys;
        xs.reserve(draw.states.size());
        ys.reserve(draw.states.size());
        for (const int s : draw.states) {
          xs.push_back(table.state(m, t, s));
          ys.push_back(group_value[size_t(group_of[size_t(s)])]);
        }

        FitDiagnostics fit_diag;
        QuadraticForm fitted =
            fit_quadratic(xs, ys, {1e-10, options.ridge}, &fit_diag);
        SlotOutput out;
        out.underdetermined = fit_diag.underdetermined;
        if (options.enforce_concavity) {
          out.clamp = eigen_clamp_excess(fitted, options.eta_min);
          fitted = project_concave(fitted, options.eta_min);
        }
        if (!fitted.finite())
          throw std::runtime_error("non-finite fitted form");
        out.form = std::move(fitted);
        out.selection_distinct = distinct_count(selection.form_index, packed.size());
        slots[size_t(slot_id)] = std::move(out);
      } catch (const std::exception& e) {
        std::ostringstream os;
        os << "backward_solve failed at t_index=" << t << " omega=" << omega
           << " mode='" << mode.label << "': " << e.what();
        throw std::runtime_error(os.str());
      }
    });

    // Canonical (m-major, omega-minor) assembly, then duplicate removal.
    std::vector<QuadraticForm> forms;
    forms.reserve(size_t(card_bound));
    std::vector<int> form_mode;
    form_mode.reserve(size_t(card_bound));
    StepDiagnostics diag;
    diag.t_index = t;
    double distinct_sum = 0.0;
    for (int slot_id = 0; slot_id < int(card_bound); ++slot_id) {
      SlotOutput& out = slots[size_t(slot_id)];
      forms.push_back(std::move(out.form));
      form_mode.push_back(slot_id / n_init);
      diag.max_concavity_clamp = std::max(diag.max_concavity_clamp, out.clamp);
      diag.underdetermined_fits += out.underdetermined ? 1 : 0;
      distinct_sum += out.selection_distinct;
    }
    diag.selection_distinct_mean = distinct_sum / double(card_bound);

    MaxPlusFunction level(spec.dim, std::move(forms));
    const std::vector<int> kept = prune_duplicate_indices(level, options.prune_tol);
    std::vector<QuadraticForm> kept_forms;
    std::vector<int> kept_modes;
    kept_forms.reserve(kept.size());
    for (const int i : kept) {
      kept_forms.push_back(level.form(i));
      kept_modes.push_back(form_mode[size_t(i)]);
    }
    levels[size_t(t)] = MaxPlusFunction(spec.dim, std::move(kept_forms));
    mode_of[size_t(t)] = std::move(kept_modes);

    diag.cardinality = levels[size_t(t)]->size();
    if (diag.cardinality > card_bound)
      throw std::logic_error("backward_solve: cardinality bound violated");
    diag.wall_ms = elapsed_ms(step_start);
    diagnostics.push_back(diag);
  }

  SolveResult result{spec, plan, seed, options, {}, {}, {}, table.diagnostics, 0.0};
  result.levels.reserve(size_t(n_steps) + 1);
  for (auto& level : levels) result.levels.push_back(std::move(*level));
  result.mode_of_form = std::move(mode_of);
  // diagnostics were collected t-descending; store ascending
  result.steps.assign(diagnostics.rbegin(), diagnostics.rend());
  result.wall_ms_total = elapsed_ms(start);
  return result;
}

double evaluate_value(const SolveResult& result, double t, const VectorXd& x) {
  const double h = result.spec.step;
  const int idx = int(std::lround(t / h));
  if (idx < 0 || idx >= int(result.levels.size()) ||
      std::abs(t - double(idx) * h) > 1e-9 * std::max(1.0, result.spec.horizon))
    throw std::invalid_argument("evaluate_value: t is not a discretization time");
  return sup_evaluate(result.levels[size_t(idx)], x).value;
}

void write_value_forms_csv(std::ostream& os, const SolveResult& result) {
  write_form_csv_header(os, result.spec.dim);
  for (size_t level = 0; level < result.levels.size(); ++level) {
    const double t = double(level) * result.spec.step;
    const auto& f = result.levels[level];
    for (int i = 0; i < f.size(); ++i) {
      const int m = result.mode_of_form[level][size_t(i)];
      const std::string& label =
          m < 0 ? std::string("terminal") : result.spec.modes[size_t(m)].label;
      write_form_csv_row(os, t, label, f.form(i));
    }
  }
}

void write_manifest(std::ostream& os, const SolveResult& result,
                    const std::map<std::string, std::string>& extra) {
  os << "seed=" << result.seed << '\n';
  os << "N_in=" << result.plan.n_init << '\n';
  os << "N_rg=" << result.plan.n_reg << '\n';
  os << "N_x=" << result.plan.n_states << '\n';
  os << "N_w=" << result.plan.n_incr << '\n';
  os << "method=" << int(result.plan.method) << '\n';
  os << "T=" << format_double(result.spec.horizon) << '\n';
  os << "h=" << format_double(result.spec.step) << '\n';
  os << "epsilon=" << format_double(result.spec.epsilon) << '\n';
  os << "modes=" << result.spec.modes.size() << '\n';
  os << "moment_match=" << (result.options.moment_match ? 1 : 0) << '\n';
  os << "enforce_concavity=" << (result.options.enforce_concavity ? 1 : 0) << '\n';
  os << "eta_min=" << format_double(result.options.eta_min) << '\n';
  os << "ridge=" << format_double(result.options.ridge) << '\n';
  os << "guard_clamped=" << result.paths.guard_clamped << '\n';
  os << "increment_mean_ok=" << (result.paths.increment_mean_ok ? 1 : 0) << '\n';
  os << "max_cardinality=" << result.max_cardinality() << '\n';
  os << "cardinality_bound=" << result.spec.modes.size() * size_t(result.plan.n_init)
     << '\n';
  for (const auto& s : result.steps) {
    const std::string prefix = "step." + std::to_string(s.t_index) + ".";
    os << prefix << "cardinality=" << s.cardinality << '\n';
    os << prefix << "max_clamp=" << format_double(s.max_concavity_clamp) << '\n';
    os << prefix << "underdetermined=" << s.underdetermined_fits << '\n';
    os << prefix << "selection_distinct_mean="
       << format_double(s.selection_distinct_mean) << '\n';
    os << prefix << "wall_ms=" << format_double(s.wall_ms) << '\n';
  }
  os << "wall_ms_total=" << format_double(result.wall_ms_total) << '\n';
  for (const auto& [key, value] : extra) os << key << '=' << value << '\n';
}

}  // namespace maxquad
