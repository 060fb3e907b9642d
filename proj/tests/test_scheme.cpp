#include <doctest.h>

#include <random>

#include "maxquad/oracle.hpp"
#include "maxquad/regression.hpp"
#include "maxquad/scheme.hpp"

using namespace maxquad;

namespace {

VectorXd vec2(double a, double b) {
  VectorXd v(2);
  v << a, b;
  return v;
}

VectorXd vec1(double a) {
  VectorXd v(1);
  v << a;
  return v;
}

QuadraticForm constant_form(int d, double c) {
  return QuadraticForm(MatrixXd::Zero(d, d), VectorXd::Zero(d), c);
}

ControlMode identity_mode(int d) {
  ControlMode mode;
  mode.label = "identity";
  mode.drift = AffineMap::zero(d);
  mode.diffusion = AffineMatrixMap::constant_map(MatrixXd::Identity(d, d));
  return mode;
}

QuadraticForm random_concave(std::mt19937& gen, int d, double curvature_scale) {
  std::normal_distribution<double> normal;
  MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = normal(gen);
  MatrixXd q = -curvature_scale * (m * m.transpose()) -
               1e-6 * MatrixXd::Identity(d, d);
  return QuadraticForm(q, VectorXd::NullaryExpr(d, [&](int) { return 5.0 * normal(gen); }),
                       10.0 * normal(gen));
}

std::vector<WeightedIncrement> gaussian_increments(std::mt19937& gen, int n, int d,
                                                   double h) {
  std::normal_distribution<double> normal;
  std::vector<WeightedIncrement> incs;
  incs.reserve(size_t(n));
  for (int i = 0; i < n; ++i)
    incs.push_back(
        {VectorXd::NullaryExpr(d, [&](int) { return std::sqrt(h) * normal(gen); }), 1.0});
  return incs;
}

}  // namespace

TEST_CASE("polynomial weights") {
  SUBCASE("order zero is identically one") { CHECK(weight_p0() == 1.0); }

  SUBCASE("order one divides the increment by sigma h") {
    const WeightContext ctx(identity_mode(2), 1.0, 0.1, vec2(0.0, 0.0));
    const VectorXd p1 = weight_p1(ctx, vec2(0.1, 0.0));
    CHECK(p1[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(p1[1] == doctest::Approx(0.0).epsilon(1e-14));
  }

  SUBCASE("order two at w = 0 is -1/h per unit sigma") {
    const WeightContext ctx(identity_mode(1), 1.0, 0.1, vec1(0.0));
    const MatrixXd p2 = weight_p2(ctx, vec1(0.0));
    CHECK(p2(0, 0) == doctest::Approx(-10.0).epsilon(1e-12));
  }

  SUBCASE("singular scaled diffusion fails naming the mode") {
    const ControlMode uv = make_lognormal_mode("rho=0.8", 0.4, 0.3, 0.8);
    CHECK_THROWS_WITH_AS(WeightContext(uv, 0.75, 0.05, vec2(0.0, 0.0)),
                         doctest::Contains("rho=0.8"), std::runtime_error);
  }
}

TEST_CASE("derivative estimators") {
  SUBCASE("constants average exactly") {
    std::vector<WeightedIncrement> incs = {{vec2(0.1, 0.2), 1.0}, {vec2(-0.3, 0.4), 2.0}};
    CHECK(estimate_d0(incs, {7.25, 7.25}) == 7.25);
  }

  SUBCASE("arithmetic mean of two values") {
    std::vector<WeightedIncrement> incs = {{vec2(0.1, 0.0), 1.0}, {vec2(0.0, 0.1), 1.0}};
    CHECK(estimate_d0(incs, {2.0, 4.0}) == 3.0);
  }

  SUBCASE("gradient estimate vanishes for a zero increment") {
    const ControlMode mode = identity_mode(2);
    std::vector<WeightedIncrement> incs = {{vec2(0.0, 0.0), 1.0}};
    const VectorXd d1 = estimate_d1(mode, 1.0, 0.1, vec2(1.0, 1.0), incs, {5.0});
    CHECK(d1.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("hessian estimate is symmetric") {
    std::mt19937 gen(3);
    const ControlMode uv = make_lognormal_mode("rho=0.8", 0.4, 0.3, 0.8);
    const auto incs = gaussian_increments(gen, 7, 2, 0.05);
    std::vector<double> values;
    std::normal_distribution<double> normal;
    for (size_t i = 0; i < incs.size(); ++i) values.push_back(normal(gen));
    const MatrixXd d2 = estimate_d2(uv, 0.75, 0.05, vec2(50, 50), incs, values);
    CHECK(d2 == d2.transpose().eval());
  }
}

TEST_CASE("moment matching enforces exact first and second moments") {
  std::mt19937 gen(11);
  const double h = 0.05;
  const auto raw = gaussian_increments(gen, 9, 2, h);
  const auto matched = moment_match(raw, h, true);
  CHECK(matched.size() == 18);

  VectorXd first = VectorXd::Zero(2);
  MatrixXd second = MatrixXd::Zero(2, 2);
  double total = 0.0;
  for (const auto& inc : matched) {
    first += inc.weight * inc.w;
    second += inc.weight * (inc.w * inc.w.transpose());
    total += inc.weight;
  }
  CHECK(first.cwiseAbs().maxCoeff() == 0.0);  // antithetic pairs cancel exactly
  CHECK((second / total - h * MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-16);

  SUBCASE("rank-deficient groups fall back to antithetic pairing") {
    const std::vector<WeightedIncrement> single = {{vec2(0.1, -0.2), 1.0}};
    const auto pair = moment_match(single, h, true);
    REQUIRE(pair.size() == 2);
    CHECK(pair[0].w == vec2(0.1, -0.2));
    CHECK(pair[1].w == -pair[0].w);
  }
}

TEST_CASE("apply_operator") {
  const ControlMode uv = make_lognormal_mode("rho=0.8", 0.4, 0.3, 0.8);
  const double h = 0.05;
  std::mt19937 gen(7);

  SUBCASE("epsilon = 1 reduces to the plain average") {
    const MaxPlusFunction z_next(2, {constant_form(2, 3.0), random_concave(gen, 2, 0.1)});
    const PackedForms packed(z_next);
    auto incs = moment_match(gaussian_increments(gen, 20, 2, h), h, true);
    const SelectionMap sel = build_selection(packed, uv, 1.0, h, vec2(50, 50), incs);
    const std::vector<double> values = selection_values(uv, 1.0, h, vec2(50, 50), sel, packed);
    const double expected = estimate_d0(sel.increments, values);
    CHECK(apply_operator(uv, 1.0, h, vec2(50, 50), sel, packed) == expected);
  }

  SUBCASE("constants are fixed points under moment matching") {
    const double k = 4.75;
    const MaxPlusFunction z_next(2, {constant_form(2, k)});
    const PackedForms packed(z_next);
    for (int trial = 0; trial < 20; ++trial) {
      auto incs = moment_match(gaussian_increments(gen, 9 + trial, 2, h), h, true);
      const SelectionMap sel = build_selection(packed, uv, 0.75, h, vec2(40, 60), incs);
      const double y = apply_operator(uv, 0.75, h, vec2(40, 60), sel, packed);
      CHECK(y == doctest::Approx(k).epsilon(1e-12));
    }
  }

  SUBCASE("matches a quadrature evaluation of the same formula") {
    // One fixed concave quadratic; the Monte Carlo operator against the
    // deterministic tensor-quadrature evaluation of d0 + h G(x, d0, d1, d2).
    const QuadraticForm phi = random_concave(gen, 2, 0.01);
    const MaxPlusFunction z_next(2, {phi});
    const PackedForms packed(z_next);
    const VectorXd x = vec2(50, 50);
    const double eps = 0.75;

    const GaussHermiteRule rule = gauss_hermite_rule(48);
    const WeightContext ctx(uv, eps, h, x);
    const VectorXd base = x;  // zero drift
    const MatrixXd scaled = eps * uv.diffusion(x);
    double d0 = 0.0;
    VectorXd d1 = VectorXd::Zero(2);
    MatrixXd d2 = MatrixXd::Zero(2, 2);
    for (size_t i = 0; i < rule.nodes.size(); ++i)
      for (size_t j = 0; j < rule.nodes.size(); ++j) {
        const double weight = rule.weights[i] * rule.weights[j];
        const VectorXd w =
            std::sqrt(h) * vec2(rule.nodes[i], rule.nodes[j]);
        const double value = evaluate(phi, base + scaled * w);
        d0 += weight * value;
        d1 += weight * value * weight_p1(ctx, w);
        d2 += weight * value * weight_p2(ctx, w);
      }
    const double reference =
        d0 + h * nonlinear_generator(uv, eps, x, d0, d1, symmetrized(d2));

    const int n_w = 4000;
    auto incs = moment_match(gaussian_increments(gen, n_w, 2, h), h, true);
    const SelectionMap sel = build_selection(packed, uv, eps, h, x, incs);
    const double y = apply_operator(uv, eps, h, x, sel, packed);

    const std::vector<double> values = selection_values(uv, eps, h, x, sel, packed);
    double mean = 0.0, var = 0.0;
    for (const double v : values) mean += v;
    mean /= double(values.size());
    for (const double v : values) var += (v - mean) * (v - mean);
    var /= double(values.size() - 1);
    const double tol = 3.0 * std::sqrt(var) / std::sqrt(double(n_w));
    CHECK(std::abs(y - reference) <= tol);
  }
}

TEST_CASE("build_selection") {
  std::mt19937 gen(13);

  SUBCASE("singleton set always selects index zero") {
    const MaxPlusFunction z_next(2, {constant_form(2, 1.0)});
    const PackedForms packed(z_next);
    const auto incs = gaussian_increments(gen, 5, 2, 0.05);
    const SelectionMap sel = build_selection(packed, make_lognormal_mode("m", 0.4, 0.3, 0.8),
                                             0.75, 0.05, vec2(50, 50), incs);
    for (const int z : sel.form_index) CHECK(z == 0);
  }

  SUBCASE("duplicate increments map to the same form") {
    std::vector<QuadraticForm> forms;
    for (int i = 0; i < 5; ++i) forms.push_back(random_concave(gen, 2, 0.05));
    const PackedForms packed(MaxPlusFunction(2, forms));
    auto incs = gaussian_increments(gen, 4, 2, 0.05);
    incs.push_back(incs[1]);
    const SelectionMap sel = build_selection(packed, make_lognormal_mode("m", 0.4, 0.3, 0.8),
                                             0.75, 0.05, vec2(50, 50), incs);
    CHECK(sel.form_index[4] == sel.form_index[1]);
  }

  SUBCASE("crossing parabolas select by position") {
    // forms in s: -s^2/2 and -(s-2)^2/2 + 1; increments steer s to 0 and 2
    MatrixXd qm(1, 1);
    qm << -1.0;
    VectorXd b1(1);
    b1 << 2.0;
    const MaxPlusFunction z_next(
        1, {QuadraticForm(qm, VectorXd::Zero(1), 0.0), QuadraticForm(qm, b1, -1.0)});
    const PackedForms packed(z_next);
    const std::vector<WeightedIncrement> incs = {{vec1(0.0), 1.0}, {vec1(2.0), 1.0}};
    const SelectionMap sel =
        build_selection(packed, identity_mode(1), 1.0, 1.0, vec1(0.0), incs);
    CHECK(sel.form_index[0] == 0);
    CHECK(sel.form_index[1] == 1);
  }
}

TEST_CASE("operator is monotone in the selected values") {
  std::mt19937 gen(17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const ControlMode uv = make_lognormal_mode("rho=-0.8", 0.4, 0.3, -0.8);
  const double h = 0.05, eps = 0.75;
  for (int trial = 0; trial < 100; ++trial) {
    const VectorXd x = vec2(20 + 60 * unit(gen), 30 + 40 * unit(gen));
    const auto incs = moment_match(gaussian_increments(gen, 6, 2, h), h, true);
    std::vector<double> values, bumped;
    std::normal_distribution<double> normal;
    for (size_t j = 0; j < incs.size(); ++j) values.push_back(5.0 * normal(gen));
    bumped = values;
    for (double& v : bumped) v += std::abs(normal(gen));
    const double lo = operator_value(uv, eps, h, x, incs, values);
    const double hi = operator_value(uv, eps, h, x, incs, bumped);
    CHECK(hi >= lo - 1e-12 * (1.0 + std::abs(lo)));
  }
}

TEST_CASE("additive subhomogeneity is exact on constants") {
  std::mt19937 gen(19);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double h = 0.05, eps = 0.75;
  for (int trial = 0; trial < 100; ++trial) {
    ControlMode mode = make_lognormal_mode("m", 0.4, 0.3, -0.8 + 1.6 * unit(gen));
    mode.discount = (trial % 2 == 0) ? 0.0 : 0.4 * unit(gen);
    const VectorXd x = vec2(20 + 60 * unit(gen), 30 + 40 * unit(gen));
    const auto incs = moment_match(gaussian_increments(gen, 5 + trial % 7, 2, h), h, true);
    std::vector<double> values;
    for (size_t j = 0; j < incs.size(); ++j) values.push_back(8.0 * normal(gen));
    const double k = 1.0 + 10.0 * unit(gen);
    std::vector<double> shifted = values;
    for (double& v : shifted) v += k;
    const double delta = operator_value(mode, eps, h, x, incs, shifted) -
                         operator_value(mode, eps, h, x, incs, values);
    CHECK(delta == doctest::Approx(k * (1.0 - h * mode.discount)).epsilon(1e-10));
  }
}

TEST_CASE("fixed-selection operator image is exactly quadratic") {
  std::mt19937 gen(23);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double h = 0.05, eps = 0.75;
  for (int trial = 0; trial < 20; ++trial) {
    const ControlMode mode = make_lognormal_mode("m", 0.4, 0.3, -0.8 + 1.6 * unit(gen));
    std::vector<QuadraticForm> forms;
    for (int i = 0; i < 3; ++i) forms.push_back(random_concave(gen, 2, 0.02));
    const PackedForms packed(MaxPlusFunction(2, forms));
    const auto incs = moment_match(gaussian_increments(gen, 5, 2, h), h, true);
    const SelectionMap sel =
        build_selection(packed, mode, eps, h, vec2(50, 50), incs);

    std::vector<VectorXd> xs;
    std::vector<double> ys;
    for (int i = 0; i < 10; ++i) {
      const VectorXd x = vec2(20 + 60 * unit(gen), 30 + 40 * unit(gen));
      xs.push_back(x);
      ys.push_back(apply_operator(mode, eps, h, x, sel, packed));
    }
    const QuadraticForm fit = fit_quadratic({xs.begin(), xs.begin() + 6},
                                            {ys.begin(), ys.begin() + 6});
    for (int i = 6; i < 10; ++i) {
      const double predicted = evaluate(fit, xs[size_t(i)]);
      CHECK(predicted ==
            doctest::Approx(ys[size_t(i)]).epsilon(1e-8));
    }
  }
}

TEST_CASE("argmax selection attains the max over all selections") {
  std::mt19937 gen(29);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double h = 0.05, eps = 0.75;
  for (int trial = 0; trial < 50; ++trial) {
    const ControlMode mode = make_lognormal_mode("m", 0.4, 0.3, -0.8 + 1.6 * unit(gen));
    const int n_forms = 2 + int(gen() % 2);  // 2 or 3
    std::vector<QuadraticForm> forms;
    for (int i = 0; i < n_forms; ++i) forms.push_back(random_concave(gen, 2, 0.02));
    const MaxPlusFunction z_next(2, forms);
    const PackedForms packed(z_next);
    const int n_incr = 1 + int(gen() % 2);  // 2 or 4 after antithetics
    const auto incs = moment_match(gaussian_increments(gen, n_incr, 2, h), h, true);
    const VectorXd x = vec2(20 + 60 * unit(gen), 30 + 40 * unit(gen));

    const SelectionMap argmax = build_selection(packed, mode, eps, h, x, incs);
    const double chosen = apply_operator(mode, eps, h, x, argmax, packed);

    // enumerate every assignment of forms to increments
    const int n = int(incs.size());
    std::vector<int> assign(size_t(n), 0);
    double best = -std::numeric_limits<double>::infinity();
    while (true) {
      SelectionMap sel;
      sel.increments = incs;
      sel.form_index = assign;
      best = std::max(best, apply_operator(mode, eps, h, x, sel, packed));
      int k = 0;
      while (k < n && ++assign[size_t(k)] == n_forms) assign[size_t(k++)] = 0;
      if (k == n) break;
    }
    CHECK(chosen == doctest::Approx(best).epsilon(1e-10));
  }
}
