#include "maxquad/sampling.hpp"

#include <cmath>
#include <stdexcept>

#include "maxquad/parallel.hpp"
#include "maxquad/util.hpp"

namespace maxquad {

void SamplePlan::validate(const std::string& context) const {
  auto fail = [&context](const std::string& msg) {
    throw std::invalid_argument(context + ": " + msg);
  };
  if (n_init < 1) fail("N_in must be >= 1");
  if (n_reg < 1) fail("N_rg must be >= 1");
  if (n_states < 1) fail("N_x must be >= 1");
  if (n_incr < 1) fail("N_w must be >= 1");
  switch (method) {
    case SamplingMethod::initial:
      if (n_reg != n_init) fail("method 1 requires N_rg == N_in");
      break;
    case SamplingMethod::shared_product:
    case SamplingMethod::independent_product:
      if (n_reg != n_states * n_incr) fail("methods 2 and 3 require N_rg == N_x * N_w");
      break;
    case SamplingMethod::states_by_all:
      if (n_incr != n_init) fail("method 4 requires N_w == N_in");
      if (n_reg != n_states * n_incr) fail("method 4 requires N_rg == N_x * N_w");
      break;
    case SamplingMethod::full_product:
      if (int64_t(n_reg) != int64_t(n_init) * int64_t(n_init))
        fail("method 5 requires N_rg == N_in^2");
      break;
    default:
      fail("method must be in {1,...,5}");
  }
}

PathTable::PathTable(int n_modes, int n_steps, int n_samples, int dim)
    : n_modes_(n_modes), n_steps_(n_steps), n_samples_(n_samples), dim_(dim) {
  increments_.assign(size_t(n_steps) * size_t(n_samples), VectorXd::Zero(dim));
  states_.assign(size_t(n_modes),
                 std::vector<VectorXd>(size_t(n_steps + 1) * size_t(n_samples),
                                       VectorXd::Zero(dim)));
}

PathTable simulate_paths(const ProblemSpec& spec, const SamplePlan& plan, uint64_t seed,
                         const SimulateOptions& options) {
  plan.validate();
  const int d = spec.dim;
  const int n_steps = spec.num_steps();
  const int n = plan.n_init;
  const int n_modes = int(spec.modes.size());
  if (int(spec.state_box.size()) != d)
    throw std::invalid_argument("simulate_paths: state_box dimension mismatch");

  PathTable table(n_modes, n_steps, n, d);
  const CounterRng rng(seed);
  const double sqrt_h = std::sqrt(spec.step);

  std::vector<int> clamped(size_t(n), 0);
  parallel_for(n, options.threads, [&](int omega) {
    // Initial state, shared across modes.
    VectorXd x0(d);
    for (int k = 0; k < d; ++k) {
      const double u = rng.uniform(RngStream::initial_state, 0, uint32_t(omega), uint32_t(k));
      const auto& box = spec.state_box[size_t(k)];
      x0[k] = box.lo + (box.hi - box.lo) * u;
    }
    for (int m = 0; m < n_modes; ++m) table.state(m, 0, omega) = x0;

    // Increments ~ Normal(0, h I), generated in Box-Muller pairs.
    for (int t = 0; t < n_steps; ++t) {
      VectorXd& dw = table.increment(t, omega);
      if (!options.zero_increments) {
        for (int k = 0; k < d; k += 2) {
          const auto pair = rng.normal_pair(RngStream::brownian_increment, uint32_t(t),
                                            uint32_t(omega), uint32_t(k / 2));
          dw[k] = sqrt_h * pair[0];
          if (k + 1 < d) dw[k + 1] = sqrt_h * pair[1];
        }
      }
    }

    // Forward recursion, clamped into the guard box when configured.
    for (int m = 0; m < n_modes; ++m) {
      for (int t = 0; t < n_steps; ++t) {
        VectorXd next = euler_step(spec.modes[size_t(m)], spec.epsilon, spec.step,
                                   table.state(m, t, omega), table.increment(t, omega));
        if (spec.guard_box) {
          for (int k = 0; k < d; ++k) {
            const auto& g = (*spec.guard_box)[size_t(k)];
            if (next[k] < g.lo || next[k] > g.hi) {
              next[k] = std::min(std::max(next[k], g.lo), g.hi);
              ++clamped[size_t(omega)];
            }
          }
        }
        table.state(m, t + 1, omega) = next;
      }
    }
  });

  for (const int c : clamped) table.diagnostics.guard_clamped += c;

  // Increment-mean diagnostic: each component mean should sit within
  // 5 sqrt(h / N_in) of zero. Advisory only.
  const double bound = 5.0 * std::sqrt(spec.step / double(n));
  for (int t = 0; t < n_steps; ++t) {
    VectorXd mean = VectorXd::Zero(d);
    for (int omega = 0; omega < n; ++omega) mean += table.increment(t, omega);
    mean /= double(n);
    for (int k = 0; k < d; ++k)
      table.diagnostics.worst_mean_ratio =
          std::max(table.diagnostics.worst_mean_ratio, std::abs(mean[k]) / bound);
  }
  table.diagnostics.increment_mean_ok =
      options.zero_increments || table.diagnostics.worst_mean_ratio <= 1.0;
  return table;
}

void write_paths_csv(std::ostream& os, const PathTable& table) {
  os << "m,t,omega";
  for (int k = 0; k < table.dim(); ++k) os << ",x" << k;
  for (int k = 0; k < table.dim(); ++k) os << ",dw" << k;
  os << '\n';
  for (int m = 0; m < table.n_modes(); ++m)
    for (int t = 0; t <= table.n_steps(); ++t)
      for (int omega = 0; omega < table.n_samples(); ++omega) {
        os << m << ',' << t << ',' << omega;
        const VectorXd& x = table.state(m, t, omega);
        for (int k = 0; k < table.dim(); ++k) os << ',' << format_double(x[k]);
        if (t < table.n_steps()) {
          const VectorXd& dw = table.increment(t, omega);
          for (int k = 0; k < table.dim(); ++k) os << ',' << format_double(dw[k]);
        } else {
          for (int k = 0; k < table.dim(); ++k) os << ',';
        }
        os << '\n';
      }
}

namespace {

std::vector<int> iota_indices(int n) {
  std::vector<int> v(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) v[size_t(i)] = i;
  return v;
}

// Random subset with replacement. Shared draws use a fixed (t, omega, m)
// key so every slot of one solve sees the same subset.
std::vector<int> draw_subset(const CounterRng& rng, RngStream stream, const PairContext& ctx,
                             bool shared, int count, int n_init) {
  std::vector<int> out(static_cast<size_t>(count));
  const uint32_t t = shared ? 0u : uint32_t(ctx.t_index);
  const uint32_t omega = shared ? 0u : uint32_t(ctx.omega);
  const uint32_t mode_shift = shared ? 0u : (uint32_t(ctx.mode) << 24);
  for (int i = 0; i < count; ++i)
    out[size_t(i)] =
        int(rng.uniform_index(stream, t, omega, mode_shift | uint32_t(i), uint64_t(n_init)));
  return out;
}

}  // namespace

PairDraw draw_pair_plan(const SamplePlan& plan, const PairContext& ctx) {
  const CounterRng rng(ctx.seed);
  PairDraw draw;
  switch (plan.method) {
    case SamplingMethod::initial:
      draw.states = iota_indices(plan.n_init);
      draw.increments = draw.states;
      draw.product = false;  // diagonal pairing (i, i)
      break;
    case SamplingMethod::shared_product:
      draw.states = draw_subset(rng, RngStream::pair_states_shared, ctx, true,
                                plan.n_states, plan.n_init);
      draw.increments = draw_subset(rng, RngStream::pair_increments_shared, ctx, true,
                                    plan.n_incr, plan.n_init);
      break;
    case SamplingMethod::independent_product:
      draw.states = draw_subset(rng, RngStream::pair_states_local, ctx, false,
                                plan.n_states, plan.n_init);
      draw.increments = draw_subset(rng, RngStream::pair_increments_local, ctx, false,
                                    plan.n_incr, plan.n_init);
      break;
    case SamplingMethod::states_by_all:
      draw.states = draw_subset(rng, RngStream::pair_states_shared, ctx, true,
                                plan.n_states, plan.n_init);
      draw.increments = iota_indices(plan.n_init);
      break;
    case SamplingMethod::full_product:
      draw.states = iota_indices(plan.n_init);
      draw.increments = iota_indices(plan.n_init);
      break;
    default:
      throw std::invalid_argument("draw_pair_plan: bad method");
  }
  return draw;
}

std::vector<std::pair<int, int>> build_pairs(const SamplePlan& plan, const PairContext& ctx) {
  plan.validate();
  const PairDraw draw = draw_pair_plan(plan, ctx);
  std::vector<std::pair<int, int>> pairs;
  if (!draw.product) {
    pairs.reserve(draw.states.size());
    for (size_t i = 0; i < draw.states.size(); ++i)
      pairs.emplace_back(draw.states[i], draw.increments[i]);
    return pairs;
  }
  pairs.reserve(draw.states.size() * draw.increments.size());
  for (const int s : draw.states)
    for (const int w : draw.increments) pairs.emplace_back(s, w);
  return pairs;
}

}  // namespace maxquad
