#include <doctest.h>

#include <set>

#include "maxquad/sampling.hpp"

using namespace maxquad;

namespace {

QuadraticForm constant_form(int d, double c) {
  return QuadraticForm(MatrixXd::Zero(d, d), VectorXd::Zero(d), c);
}

ProblemSpec uv_spec(double horizon = 0.25, double step = 0.05) {
  return ProblemSpec{2,
                     horizon,
                     step,
                     0.75,
                     {make_lognormal_mode("rho=-0.8", 0.4, 0.3, -0.8),
                      make_lognormal_mode("rho=0.8", 0.4, 0.3, 0.8)},
                     MaxPlusFunction(2, {constant_form(2, 0.0)}),
                     {{20.0, 80.0}, {30.0, 70.0}},
                     {},
                     {},
                     {}};
}

SamplePlan plan_m2(int n_init, int n_states, int n_incr) {
  return {n_init, n_states * n_incr, n_states, n_incr, SamplingMethod::shared_product};
}

uint64_t pair_hash(const std::vector<std::pair<int, int>>& pairs) {
  uint64_t h = 1469598103934665603ull;
  for (const auto& [a, b] : pairs) {
    h = (h ^ uint64_t(a)) * 1099511628211ull;
    h = (h ^ uint64_t(b)) * 1099511628211ull;
  }
  return h;
}

}  // namespace

TEST_CASE("plan invariants") {
  const SamplePlan good_m2{1000, 10000, 10, 1000, SamplingMethod::shared_product};
  CHECK_NOTHROW(good_m2.validate());
  const SamplePlan bad_m2{1000, 9999, 10, 1000, SamplingMethod::shared_product};
  CHECK_THROWS_AS(bad_m2.validate(), std::invalid_argument);
  const SamplePlan bad_m1{1000, 999, 10, 1000, SamplingMethod::initial};
  CHECK_THROWS_AS(bad_m1.validate(), std::invalid_argument);
  const SamplePlan good_m1{3, 3, 1, 1, SamplingMethod::initial};
  CHECK_NOTHROW(good_m1.validate());
  const SamplePlan good_m5{4, 16, 1, 1, SamplingMethod::full_product};
  CHECK_NOTHROW(good_m5.validate());
  const SamplePlan bad_m5{4, 15, 1, 1, SamplingMethod::full_product};
  CHECK_THROWS_AS(bad_m5.validate(), std::invalid_argument);
  // method 4 requires the full increment set
  const SamplePlan good_m4{8, 3 * 8, 3, 8, SamplingMethod::states_by_all};
  CHECK_NOTHROW(good_m4.validate());
  const SamplePlan bad_m4{8, 3 * 4, 3, 4, SamplingMethod::states_by_all};
  CHECK_THROWS_AS(bad_m4.validate(), std::invalid_argument);
}

TEST_CASE("simulate_paths basics") {
  const ProblemSpec spec = uv_spec();

  SUBCASE("zero-increment hook freezes driftless paths") {
    const SamplePlan plan = plan_m2(5, 2, 2);
    const PathTable table = simulate_paths(spec, plan, 42, {1, true});
    for (int m = 0; m < 2; ++m)
      for (int t = 0; t <= table.n_steps(); ++t)
        for (int omega = 0; omega < 5; ++omega)
          CHECK(table.state(m, t, omega) == table.state(m, 0, omega));
  }

  SUBCASE("single-sample table") {
    const SamplePlan plan{1, 1, 1, 1, SamplingMethod::initial};
    const PathTable table = simulate_paths(spec, plan, 7, {});
    CHECK(table.n_samples() == 1);
    CHECK(table.n_modes() == 2);
    CHECK(table.n_steps() == 5);
  }

  SUBCASE("increment variance matches the step") {
    ProblemSpec coarse = uv_spec(0.5, 0.1);
    const SamplePlan plan = plan_m2(1000, 10, 100);
    const PathTable table = simulate_paths(coarse, plan, 99, {});
    for (int k = 0; k < 2; ++k) {
      double mean = 0.0, var = 0.0;
      for (int omega = 0; omega < 1000; ++omega) mean += table.increment(0, omega)[k];
      mean /= 1000.0;
      for (int omega = 0; omega < 1000; ++omega) {
        const double d = table.increment(0, omega)[k] - mean;
        var += d * d;
      }
      var /= 999.0;
      CHECK(var == doctest::Approx(0.1).epsilon(0.10));
    }
    CHECK(table.diagnostics.increment_mean_ok);
  }

  SUBCASE("forward recursion holds bit-for-bit without a guard box") {
    const SamplePlan plan = plan_m2(50, 5, 10);
    ProblemSpec open = uv_spec();
    open.guard_box.reset();
    const PathTable table = simulate_paths(open, plan, 3, {2, false});
    for (int m = 0; m < 2; ++m)
      for (int t = 0; t < table.n_steps(); ++t)
        for (int omega = 0; omega < 50; ++omega) {
          const VectorXd expected =
              euler_step(open.modes[size_t(m)], open.epsilon, open.step,
                         table.state(m, t, omega), table.increment(t, omega));
          CHECK(table.state(m, t + 1, omega) == expected);
        }
    CHECK(table.diagnostics.guard_clamped == 0);
  }

  SUBCASE("guard box clamps and counts") {
    ProblemSpec guarded = uv_spec();
    guarded.guard_box = std::vector<Interval>{{49.0, 51.0}, {49.0, 51.0}};
    guarded.state_box = {{49.5, 50.5}, {49.5, 50.5}};
    const PathTable table = simulate_paths(guarded, plan_m2(200, 5, 10), 11, {});
    CHECK(table.diagnostics.guard_clamped > 0);
    for (int m = 0; m < 2; ++m)
      for (int t = 0; t <= table.n_steps(); ++t)
        for (int omega = 0; omega < 200; ++omega) {
          CHECK(table.state(m, t, omega)[0] >= 49.0);
          CHECK(table.state(m, t, omega)[0] <= 51.0);
        }
  }

  SUBCASE("determinism across thread counts") {
    const SamplePlan plan = plan_m2(100, 5, 10);
    const PathTable a = simulate_paths(spec, plan, 1234, {1, false});
    const PathTable b = simulate_paths(spec, plan, 1234, {4, false});
    for (int m = 0; m < 2; ++m)
      for (int t = 0; t <= a.n_steps(); ++t)
        for (int omega = 0; omega < 100; ++omega)
          CHECK(a.state(m, t, omega) == b.state(m, t, omega));
  }
}

TEST_CASE("build_pairs methods") {
  SUBCASE("method 1 is the diagonal") {
    const SamplePlan plan{3, 3, 1, 1, SamplingMethod::initial};
    const auto pairs = build_pairs(plan, {5, 0, 0, 0});
    CHECK(pairs == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}, {2, 2}});
  }

  SUBCASE("method 5 is the row-major full product") {
    const SamplePlan plan{2, 4, 1, 1, SamplingMethod::full_product};
    const auto pairs = build_pairs(plan, {5, 0, 0, 0});
    CHECK(pairs == std::vector<std::pair<int, int>>{{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  }

  SUBCASE("method 2 returns the same pairs for every slot of a solve") {
    const SamplePlan plan{50, 6, 2, 3, SamplingMethod::shared_product};
    const auto ref = build_pairs(plan, {5, 0, 0, 0});
    CHECK(ref.size() == 6);
    for (int t = 0; t < 3; ++t)
      for (int omega = 0; omega < 4; ++omega)
        for (int mode = 0; mode < 2; ++mode)
          CHECK(pair_hash(build_pairs(plan, {5, t, omega, mode})) == pair_hash(ref));
    // a different seed redraws
    CHECK(pair_hash(build_pairs(plan, {6, 0, 0, 0})) != pair_hash(ref));
  }

  SUBCASE("method 3 redraws per slot") {
    const SamplePlan plan{20, 6, 2, 3, SamplingMethod::independent_product};
    std::set<uint64_t> hashes;
    for (int omega = 0; omega < 6; ++omega)
      hashes.insert(pair_hash(build_pairs(plan, {5, 0, omega, 0})));
    CHECK(hashes.size() >= 2);
  }

  SUBCASE("method 4 crosses random states with every increment") {
    const SamplePlan plan{5, 10, 2, 5, SamplingMethod::states_by_all};
    const auto pairs = build_pairs(plan, {5, 0, 0, 0});
    CHECK(pairs.size() == 10);
    for (size_t i = 0; i < pairs.size(); ++i) CHECK(pairs[i].second == int(i % 5));
  }

  SUBCASE("indices stay inside the initial sample") {
    const SamplePlan plan{17, 12, 3, 4, SamplingMethod::shared_product};
    for (const auto& [s, w] : build_pairs(plan, {77, 2, 1, 1})) {
      CHECK(s >= 0);
      CHECK(s < 17);
      CHECK(w >= 0);
      CHECK(w < 17);
    }
  }
}
