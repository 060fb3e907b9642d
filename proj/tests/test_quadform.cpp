#include <doctest.h>

#include <random>

#include "maxquad/quadform.hpp"

using namespace maxquad;

namespace {

QuadraticForm constant_form(int d, double c) {
  return QuadraticForm(MatrixXd::Zero(d, d), VectorXd::Zero(d), c);
}

VectorXd vec2(double a, double b) {
  VectorXd v(2);
  v << a, b;
  return v;
}

MatrixXd random_symmetric(std::mt19937& gen, int d) {
  std::normal_distribution<double> normal;
  MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = normal(gen);
  return symmetrized(m);
}

}  // namespace

TEST_CASE("evaluate matches the quadratic formula") {
  CHECK(evaluate(constant_form(2, 7.0), vec2(3, -4)) == 7.0);

  QuadraticForm isotropic(-2.0 * MatrixXd::Identity(2, 2), VectorXd::Zero(2), 0.0);
  CHECK(evaluate(isotropic, vec2(1, 0)) == -1.0);

  MatrixXd q(2, 2);
  q << -2, 0, 0, -4;
  QuadraticForm mixed(q, vec2(1, 1), 5.0);
  CHECK(evaluate(mixed, vec2(1, 2)) == -1.0);

  VectorXd wrong(3);
  wrong << 1, 2, 3;
  CHECK_THROWS_AS(evaluate(mixed, wrong), std::invalid_argument);
}

TEST_CASE("forms are stored exactly symmetric") {
  MatrixXd skewed(2, 2);
  skewed << 1.0, 0.25, 0.75, -2.0;
  QuadraticForm q(skewed, VectorXd::Zero(2), 0.0);
  CHECK(q.Q(0, 1) == q.Q(1, 0));
  CHECK(q.Q(0, 1) == 0.5);
}

TEST_CASE("sup_evaluate picks the max with lowest-index ties") {
  MaxPlusFunction two_constants(2, {constant_form(2, 1.0), constant_form(2, 3.0)});
  const auto r = sup_evaluate(two_constants, vec2(10, -3));
  CHECK(r.value == 3.0);
  CHECK(r.index == 1);

  MaxPlusFunction singleton(2, {constant_form(2, -2.5)});
  const auto s = sup_evaluate(singleton, vec2(0, 0));
  CHECK(s.value == -2.5);
  CHECK(s.index == 0);

  // ties break to the lowest index
  MaxPlusFunction tied(2, {constant_form(2, 1.0), constant_form(2, 1.0)});
  CHECK(sup_evaluate(tied, vec2(4, 4)).index == 0);

  // crossing parabolas in one dimension: -x^2/2 vs -(x-2)^2/2 + 1
  MatrixXd qm(1, 1);
  qm << -1.0;
  VectorXd b0 = VectorXd::Zero(1), b1(1);
  b1 << 2.0;
  MaxPlusFunction crossing(1, {QuadraticForm(qm, b0, 0.0), QuadraticForm(qm, b1, -1.0)});
  VectorXd at_two(1);
  at_two << 2.0;
  const auto c = sup_evaluate(crossing, at_two);
  CHECK(c.value == doctest::Approx(1.0));
  CHECK(c.index == 1);

  CHECK_THROWS_AS(MaxPlusFunction(2, {}), std::invalid_argument);
}

TEST_CASE("compose_affine coefficient arithmetic") {
  MatrixXd q(2, 2);
  q << -2, 0.5, 0.5, -4;
  QuadraticForm form(q, vec2(1, -1), 3.0);

  SUBCASE("identity composition returns the identical triple") {
    const auto same = compose_affine(form, MatrixXd::Identity(2, 2), VectorXd::Zero(2));
    CHECK(same.Q == form.Q);
    CHECK(same.b == form.b);
    CHECK(same.c == form.c);
  }

  SUBCASE("pure scaling") {
    QuadraticForm iso(-MatrixXd::Identity(2, 2), VectorXd::Zero(2), 0.0);
    const auto scaled = compose_affine(iso, 2.0 * MatrixXd::Identity(2, 2), VectorXd::Zero(2));
    CHECK(scaled.Q.isApprox(-4.0 * MatrixXd::Identity(2, 2)));
    CHECK(scaled.b.isZero(0.0));
    CHECK(scaled.c == 0.0);
  }

  SUBCASE("one-dimensional worked example") {
    MatrixXd qq(1, 1);
    qq << -2.0;
    VectorXd bb(1);
    bb << 1.0;
    QuadraticForm f(qq, bb, 0.0);
    MatrixXd a(1, 1);
    a << 3.0;
    VectorXd shift(1);
    shift << 1.0;
    const auto g = compose_affine(f, a, shift);
    CHECK(g.Q(0, 0) == -18.0);
    CHECK(g.b(0) == -3.0);
    CHECK(g.c == 0.0);
  }

  SUBCASE("exactness over random compositions") {
    std::mt19937 gen(7);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 1000; ++trial) {
      const int d = 1 + int(gen() % 3);
      QuadraticForm f(random_symmetric(gen, d), VectorXd::NullaryExpr(d, [&](int) {
                        return normal(gen);
                      }),
                      normal(gen));
      MatrixXd a(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = normal(gen);
      VectorXd b0 = VectorXd::NullaryExpr(d, [&](int) { return normal(gen); });
      VectorXd x = VectorXd::NullaryExpr(d, [&](int) { return normal(gen); });
      const double direct = evaluate(f, a * x + b0);
      const double composed = evaluate(compose_affine(f, a, b0), x);
      CHECK(composed == doctest::Approx(direct).epsilon(1e-12));
    }
  }
}

TEST_CASE("sup_evaluate is monotone under set inclusion") {
  std::mt19937 gen(11);
  std::normal_distribution<double> normal;
  std::vector<QuadraticForm> forms;
  for (int i = 0; i < 6; ++i)
    forms.emplace_back(random_symmetric(gen, 2),
                       VectorXd::NullaryExpr(2, [&](int) { return normal(gen); }),
                       normal(gen));
  MaxPlusFunction small(2, {forms[0], forms[1], forms[2]});
  MaxPlusFunction large(2, forms);
  for (int trial = 0; trial < 200; ++trial) {
    const VectorXd x = VectorXd::NullaryExpr(2, [&](int) { return 3.0 * normal(gen); });
    CHECK(sup_evaluate(small, x).value <= sup_evaluate(large, x).value + 1e-15);
  }
}

TEST_CASE("prune_duplicates") {
  QuadraticForm a = constant_form(2, 1.0);
  QuadraticForm b = constant_form(2, 1.0);

  SUBCASE("bit-identical forms collapse at tol 0") {
    MaxPlusFunction f(2, {a, b});
    CHECK(prune_duplicates(f, 0.0).size() == 1);
  }

  SUBCASE("distinct forms survive tol 0") {
    MaxPlusFunction f(2, {a, constant_form(2, 2.0)});
    CHECK(prune_duplicates(f, 0.0).size() == 2);
  }

  SUBCASE("near-duplicates collapse within tol") {
    QuadraticForm c = constant_form(2, 1.0 + 1e-12);
    MaxPlusFunction f(2, {a, c});
    CHECK(prune_duplicates(f, 1e-9).size() == 1);
    CHECK(prune_duplicates(f, 0.0).size() == 2);
  }

  SUBCASE("supremum is preserved within the tolerance bound") {
    std::mt19937 gen(3);
    std::normal_distribution<double> normal;
    std::vector<QuadraticForm> forms;
    for (int i = 0; i < 10; ++i) {
      QuadraticForm base(random_symmetric(gen, 2),
                         VectorXd::NullaryExpr(2, [&](int) { return normal(gen); }),
                         normal(gen));
      forms.push_back(base);
      if (i % 2 == 0) {
        QuadraticForm wiggled = base;
        wiggled.c += 1e-8 * normal(gen);
        forms.push_back(wiggled);
      }
    }
    MaxPlusFunction f(2, forms);
    const double tol = 1e-6;
    MaxPlusFunction pruned = prune_duplicates(f, tol);
    CHECK(pruned.size() < f.size());
    for (int trial = 0; trial < 500; ++trial) {
      const VectorXd x = VectorXd::NullaryExpr(2, [&](int) { return 2.0 * normal(gen); });
      const double before = sup_evaluate(f, x).value;
      const double after = sup_evaluate(pruned, x).value;
      // component-wise tol on (Q, b, c) bounds the value change by
      // tol * (1 + |x|_1 + |x|_1^2 / 2)
      const double l1 = x.cwiseAbs().sum();
      const double bound = tol * (1.0 + l1 + 0.5 * l1 * l1);
      CHECK(after <= before + 1e-15);
      CHECK(before - after <= bound);
    }
  }
}

TEST_CASE("packed evaluation agrees with evaluate") {
  std::mt19937 gen(13);
  std::normal_distribution<double> normal;
  std::vector<QuadraticForm> forms;
  for (int i = 0; i < 8; ++i)
    forms.emplace_back(random_symmetric(gen, 3),
                       VectorXd::NullaryExpr(3, [&](int) { return normal(gen); }),
                       normal(gen));
  MaxPlusFunction f(3, forms);
  PackedForms packed(f);
  std::vector<double> phi(size_t(packed.n_monomials()));
  std::vector<double> scratch;
  for (int trial = 0; trial < 100; ++trial) {
    const VectorXd x = VectorXd::NullaryExpr(3, [&](int) { return 2.0 * normal(gen); });
    fill_monomials(x, phi.data());
    const auto direct = sup_evaluate(f, x);
    const auto fast = packed.sup(phi.data(), scratch);
    CHECK(fast.value == doctest::Approx(direct.value).epsilon(1e-12));
    for (int i = 0; i < f.size(); ++i)
      CHECK(packed.value(i, phi.data()) ==
            doctest::Approx(evaluate(f.form(i), x)).epsilon(1e-12));
  }
}

TEST_CASE("csv row format") {
  std::ostringstream os;
  write_form_csv_header(os, 2);
  MatrixXd q(2, 2);
  q << -1, 0.5, 0.5, -2;
  write_form_csv_row(os, 0.25, "terminal", QuadraticForm(q, vec2(1, 2), 3.0));
  const std::string text = os.str();
  CHECK(text.find("t,mode_label,Q00,Q01,Q11,b0,b1,c\n") == 0);
  CHECK(text.find("0.25,terminal,-1,0.5,-2,1,2,3\n") != std::string::npos);
}
