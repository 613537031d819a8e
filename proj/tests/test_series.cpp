#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "loopwell/series.hpp"

using namespace loopwell;

namespace {

FourierTaylorSeries cos_theta(double I0, int K, int J, double amp = 1.0) {
  FourierTaylorSeries s(I0, K, J);
  s.at(1, 0) = amp / 2;
  s.at(-1, 0) = amp / 2;
  return s;
}

FourierTaylorSeries random_real_series(std::mt19937_64& rng, double I0, int K, int J) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  FourierTaylorSeries s(I0, K, J);
  for (int j = 0; j <= J; ++j) {
    s.at(0, j) = u(rng);
    for (int k = 1; k <= K; ++k) {
      const cplx c{u(rng), u(rng)};
      s.at(k, j) = c;
      s.at(-k, j) = std::conj(c);
    }
  }
  return s;
}

SymbolModel identity_model(double I0 = 0.0, double b0 = 0.0) {
  SymbolModel m;
  m.b0 = b0;
  m.I0 = I0;
  m.g = TaylorSeries({0.0, 1.0});
  return m;
}

SymbolModel random_model(std::mt19937_64& rng, int J) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SymbolModel m;
  m.b0 = u(rng);
  m.I0 = 0.5 + 0.5 * u(rng);
  std::vector<double> g(static_cast<std::size_t>(J) + 1, 0.0);
  g[1] = 0.5 + 0.5 * std::abs(u(rng));
  for (int j = 2; j <= J; ++j) g[static_cast<std::size_t>(j)] = 0.3 * u(rng);
  m.g = TaylorSeries(std::move(g));
  return m;
}

// Central differences of the pointwise evaluation.
double fd_bracket(const FourierTaylorSeries& a, const FourierTaylorSeries& b, double th, double I) {
  const double h = 1e-5;
  auto dI = [&](const FourierTaylorSeries& s) {
    return (s.evaluate(th, I + h).real() - s.evaluate(th, I - h).real()) / (2 * h);
  };
  auto dT = [&](const FourierTaylorSeries& s) {
    return (s.evaluate(th + h, I).real() - s.evaluate(th - h, I).real()) / (2 * h);
  };
  return dI(a) * dT(b) - dT(a) * dI(b);
}

}  // namespace

TEST(Taylor, ProductTruncatesAtCut) {
  const TaylorSeries a({1.0, 2.0});
  const auto p = a * a;
  EXPECT_DOUBLE_EQ(p[0], 1.0);
  EXPECT_DOUBLE_EQ(p[1], 4.0);
  EXPECT_EQ(p.cut(), 1);
}

TEST(Taylor, ReversionInvertsComposition) {
  const TaylorSeries g({0.0, 1.5, -0.4, 0.2, 0.05, 0.0, 0.0});
  const auto r = reversion(g);
  const auto id = compose(g, r);
  for (int j = 0; j <= 6; ++j) EXPECT_NEAR(id[j], j == 1 ? 1.0 : 0.0, 1e-13) << j;
  for (double s : {-0.05, 0.02, 0.04}) EXPECT_NEAR(g(r(s)), s, 1e-8);
}

TEST(Taylor, DivisionAndDivisibilityError) {
  const TaylorSeries num({1.0, 3.0, 3.0, 1.0});
  const TaylorSeries den({1.0, 1.0, 0.0, 0.0});
  const auto q = divide(num, den);
  EXPECT_NEAR(q[0], 1.0, 1e-15);
  EXPECT_NEAR(q[1], 2.0, 1e-15);
  EXPECT_NEAR(q[2], 1.0, 1e-15);
  EXPECT_NEAR(q[3], 0.0, 1e-15);
  EXPECT_THROW(divide_by_variable(TaylorSeries({0.5, 1.0})), ContractError);
  const auto d = divide_by_variable(TaylorSeries({0.0, 2.0, 3.0}));
  EXPECT_DOUBLE_EQ(d[0], 2.0);
  EXPECT_DOUBLE_EQ(d[1], 3.0);
  EXPECT_EQ(d.valid_order(), 1);
}

TEST(Series, AddExamples) {
  const auto s = add(FourierTaylorSeries::constant(0.0, 2, 3, 1.0), FourierTaylorSeries(0.0, 2, 3));
  EXPECT_EQ(s(0, 0), cplx(1.0));
  EXPECT_EQ(s.max_abs(), 1.0);

  const auto c2 = add(cos_theta(0, 2, 3), cos_theta(0, 2, 3));
  EXPECT_EQ(c2(1, 0), cplx(1.0));
  EXPECT_EQ(c2(-1, 0), cplx(1.0));

  const auto u = add(FourierTaylorSeries::action_power(0.0, 2, 3, 1), FourierTaylorSeries(0.0, 2, 3));
  double rest = 0.0;
  u.for_each_nonzero([&](int k, int j, cplx c) {
    if (!(k == 0 && j == 1)) rest += std::abs(c);
  });
  EXPECT_EQ(u(0, 1), cplx(1.0));
  EXPECT_EQ(rest, 0.0);
}

TEST(Series, AddRejectsDifferentCharts) {
  EXPECT_THROW(add(FourierTaylorSeries(0.0, 1, 1), FourierTaylorSeries(0.5, 1, 1)), ContractError);
  EXPECT_THROW(multiply(FourierTaylorSeries(0.0, 1, 1), FourierTaylorSeries(0.5, 1, 1)), ContractError);
}

TEST(Series, AddKeepsMinimumCutsAndValidity) {
  FourierTaylorSeries a(0.0, 1, 4);
  a.set_valid_order(2);
  const auto s = add(a, FourierTaylorSeries(0.0, 3, 3));
  EXPECT_EQ(s.fourier_cut(), 1);
  EXPECT_EQ(s.taylor_cut(), 3);
  EXPECT_EQ(s.valid_order(), 2);
}

TEST(Series, MultiplyExamples) {
  const auto c = cos_theta(0, 3, 2);
  const auto cc = multiply(c, c);
  EXPECT_NEAR(cc(0, 0).real(), 0.5, 1e-15);
  EXPECT_NEAR(cc(2, 0).real(), 0.25, 1e-15);
  EXPECT_NEAR(cc(-2, 0).real(), 0.25, 1e-15);

  const auto u = FourierTaylorSeries::action_power(0.3, 0, 1, 1);
  const auto uu = multiply(u, u);
  EXPECT_TRUE(uu.is_zero());
  EXPECT_EQ(uu.valid_order(), 1);

  const auto one = multiply(FourierTaylorSeries::monomial(0, 1, 0, 1, 0), FourierTaylorSeries::monomial(0, 1, 0, -1, 0));
  EXPECT_EQ(one(0, 0), cplx(1.0));
  EXPECT_EQ(one.max_abs(), 1.0);
}

TEST(Series, MultiplyAgreesPointwise) {
  std::mt19937_64 rng(7);
  const auto a = random_real_series(rng, 0.2, 3, 6);
  const auto b = random_real_series(rng, 0.2, 2, 6);
  const auto p = multiply(a.resized(5, 6), b.resized(5, 6));
  const double I = 0.2 + 1e-3;
  for (double th : {0.3, 1.7, 4.0}) {
    const auto exact = a.evaluate(th, I) * b.evaluate(th, I);
    EXPECT_NEAR(p.evaluate(th, I).real(), exact.real(), 1e-12);
    EXPECT_NEAR(p.evaluate(th, I).imag(), 0.0, 1e-13);
  }
}

TEST(Series, BracketExamples) {
  const auto u = FourierTaylorSeries::action_power(0.0, 2, 3, 1);
  const auto e = FourierTaylorSeries::monomial(0.0, 2, 3, 1, 0);
  const auto br = poisson_bracket(u, e);
  EXPECT_EQ(br(1, 0), cplx(0.0, 1.0));
  EXPECT_EQ(br.max_abs(), 1.0);
  EXPECT_EQ(br.valid_order(), 2);

  // {b0 + I^2, e^{i theta}} = 2 i I e^{i theta}
  const auto p = identity_model(0.0, 0.7).principal_symbol(2, 3);
  const auto br2 = poisson_bracket(p, e);
  EXPECT_NEAR(std::abs(br2(1, 1) - cplx(0.0, 2.0)), 0.0, 1e-15);
  EXPECT_NEAR(br2.max_abs(), 2.0, 1e-15);

  std::mt19937_64 rng(3);
  const auto a = random_real_series(rng, 0.0, 3, 4);
  EXPECT_LT(poisson_bracket(a, a).max_abs(), 1e-14 * a.max_abs() * a.max_abs());
}

TEST(Series, BracketNeedsValidity) {
  FourierTaylorSeries a(0.0, 1, 2);
  a.set_valid_order(0);
  EXPECT_THROW(poisson_bracket(a, FourierTaylorSeries(0.0, 1, 2)), TruncationError);
}

TEST(Series, BracketMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  const auto a = random_real_series(rng, 0.4, 3, 6);
  const auto b = random_real_series(rng, 0.4, 3, 6);
  const auto br = poisson_bracket(a.resized(6, 6), b.resized(6, 6));
  for (double th : {0.1, 2.2, 5.0})
    EXPECT_NEAR(br.evaluate(th, 0.4 + 1e-3).real(), fd_bracket(a, b, th, 0.4 + 1e-3), 1e-5);
}

TEST(Series, BracketAntisymmetryBilinearityLeibniz) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    // Fourier cut large enough that no product drops modes
    const auto a = random_real_series(rng, 0.1, 2, 6).resized(8, 6);
    const auto b = random_real_series(rng, 0.1, 2, 6).resized(8, 6);
    const auto c = random_real_series(rng, 0.1, 2, 6).resized(8, 6);
    const int through = 5;
    const double rel = 1e-12;

    const auto ab = poisson_bracket(a, b);
    EXPECT_LT(max_abs_difference(ab, scale(poisson_bracket(b, a), -1.0), through), rel * ab.max_abs());

    const auto lhs = poisson_bracket(add(a, scale(c, 2.0)), b);
    const auto rhs = add(ab, scale(poisson_bracket(c, b), 2.0));
    EXPECT_LT(max_abs_difference(lhs, rhs, through), rel * lhs.max_abs());

    const auto leib_l = poisson_bracket(a, multiply(b, c));
    const auto leib_r = add(multiply(ab, c), multiply(b, poisson_bracket(a, c)));
    EXPECT_LT(max_abs_difference(leib_l, leib_r, through), rel * leib_l.max_abs());
  }
}

TEST(Series, RealityPreserved) {
  std::mt19937_64 rng(9);
  const auto a = random_real_series(rng, 0.3, 3, 5);
  const auto b = random_real_series(rng, 0.3, 3, 5);
  for (const auto& s : {add(a, b), multiply(a, b), poisson_bracket(a, b), average(a), d_angle(a), d_action(b)})
    EXPECT_LT(s.reality_defect(), 1e-14);
  const auto parts = split(a);
  EXPECT_LT(parts.kernel_part.reality_defect(), 1e-14);
  EXPECT_LT(parts.image_part.reality_defect(), 1e-14);
  EXPECT_LT(parts.boundary_part.reality_defect(), 1e-14);
}

TEST(Series, AverageExamples) {
  auto h = cos_theta(0.0, 2, 2);
  h.at(0, 0) = 3.0;
  const auto avg = average(h);
  EXPECT_EQ(avg(0, 0), cplx(3.0));
  EXPECT_EQ(avg.max_abs(), 3.0);

  FourierTaylorSeries isin(0.0, 2, 2);  // I sin(theta) at I0 = 0
  isin.at(1, 1) = cplx(0.0, -0.5);
  isin.at(-1, 1) = cplx(0.0, 0.5);
  EXPECT_TRUE(average(isin).is_zero());

  auto h2 = FourierTaylorSeries::action_power(0.4, 2, 3, 2);
  h2.at(2, 1) = 0.5;
  h2.at(-2, 1) = 0.5;
  const auto a2 = average(h2);
  EXPECT_EQ(a2(0, 2), cplx(1.0));
  EXPECT_EQ(a2.max_abs(), 1.0);
}

TEST(Series, SplitExamples) {
  const auto c = cos_theta(0.2, 2, 3);
  auto parts = split(c);
  EXPECT_TRUE(parts.kernel_part.is_zero());
  EXPECT_TRUE(parts.image_part.is_zero());
  EXPECT_EQ(max_abs_difference(parts.boundary_part, c, 3), 0.0);

  FourierTaylorSeries ucos(0.2, 2, 3);
  ucos.at(1, 1) = 0.5;
  ucos.at(-1, 1) = 0.5;
  parts = split(ucos);
  EXPECT_TRUE(parts.kernel_part.is_zero());
  EXPECT_TRUE(parts.boundary_part.is_zero());
  EXPECT_EQ(max_abs_difference(parts.image_part, ucos, 3), 0.0);

  auto h = FourierTaylorSeries::action_power(0.2, 2, 3, 2);
  h.at(0, 0) = 5.0;
  parts = split(h);
  EXPECT_EQ(parts.kernel_part(0, 2), cplx(1.0));
  EXPECT_EQ(parts.kernel_part.max_abs(), 1.0);
  EXPECT_TRUE(parts.image_part.is_zero());
  EXPECT_EQ(parts.boundary_part(0, 0), cplx(5.0));
  EXPECT_EQ(parts.boundary_part.max_abs(), 5.0);
}

TEST(Series, SplitIsAProjectionTriple) {
  std::mt19937_64 rng(13);
  const auto h = random_real_series(rng, 0.0, 3, 4);
  const auto p = split(h);
  const auto sum = add(add(p.kernel_part, p.image_part), p.boundary_part);
  EXPECT_EQ(max_abs_difference(sum, h, 4), 0.0);

  const auto zero = FourierTaylorSeries(0.0, 3, 4);
  const auto pk = split(p.kernel_part);
  EXPECT_EQ(max_abs_difference(pk.kernel_part, p.kernel_part, 4), 0.0);
  EXPECT_TRUE(pk.image_part.is_zero() && pk.boundary_part.is_zero());
  const auto pi = split(p.image_part);
  EXPECT_EQ(max_abs_difference(pi.image_part, p.image_part, 4), 0.0);
  EXPECT_TRUE(pi.kernel_part.is_zero() && pi.boundary_part.is_zero());
  const auto pb = split(p.boundary_part);
  EXPECT_EQ(max_abs_difference(pb.boundary_part, p.boundary_part, 4), 0.0);
  EXPECT_TRUE(pb.kernel_part.is_zero() && pb.image_part.is_zero());
  (void)zero;
}

TEST(Series, CohomologicalExamples) {
  const auto m = identity_model();
  // r = I cos(theta): a = sin(theta)/2 under {a,b} = a_I b_theta - a_theta b_I, q = 0, V = 0
  FourierTaylorSeries r(0.0, 2, 4);
  r.at(1, 1) = 0.5;
  r.at(-1, 1) = 0.5;
  auto sol = solve_cohomological(r, m);
  EXPECT_NEAR(std::abs(sol.generator(1, 0) - cplx(0.0, -0.25)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(sol.generator(-1, 0) - cplx(0.0, 0.25)), 0.0, 1e-15);
  EXPECT_NEAR(sol.generator.max_abs(), 0.25, 1e-15);
  EXPECT_EQ(sol.q.max_abs(), 0.0);
  EXPECT_TRUE(sol.potential.is_zero());
  // hand check of the bracket: {b0 + I^2, sin(theta)/2} = 2I cos(theta)/2
  const auto br = poisson_bracket(m.principal_symbol(2, 4), sol.generator);
  EXPECT_LT(max_abs_difference(br, r, br.valid_order()), 1e-15);

  sol = solve_cohomological(cos_theta(0.0, 2, 4), m);
  EXPECT_TRUE(sol.generator.is_zero());
  EXPECT_EQ(sol.q.max_abs(), 0.0);
  EXPECT_EQ(max_abs_difference(sol.potential, cos_theta(0.0, 2, 4), 4), 0.0);

  sol = solve_cohomological(FourierTaylorSeries::action_power(0.0, 2, 4, 2), m);
  EXPECT_TRUE(sol.generator.is_zero());
  EXPECT_TRUE(sol.potential.is_zero());
  EXPECT_NEAR(sol.q[2], 1.0, 1e-15);
  EXPECT_NEAR(sol.q[1], 0.0, 1e-15);
  EXPECT_NEAR(sol.q[3], 0.0, 1e-15);
}

TEST(Series, CohomologicalReconstructionOnRandomSeries) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const int K = 1 + trial % 5;
    const int J = 4 + trial % 4;
    const auto m = random_model(rng, 3);
    const auto r = random_real_series(rng, m.I0, K, J);
    const auto sol = solve_cohomological(r, m);
    const auto br = poisson_bracket(m.principal_symbol(K, J), sol.generator);
    const auto rebuilt = add(add(br, kernel_function(sol.q, m, K)), sol.potential);
    const int through = rebuilt.valid_order();
    ASSERT_GE(through, J - 2);
    EXPECT_LT(max_abs_difference(rebuilt, r, through), 1e-11 * r.max_abs()) << "trial " << trial;
    EXPECT_LT(sol.generator.reality_defect(), 1e-14);
  }
}

TEST(Series, CohomologicalRejectsNonRealInput) {
  FourierTaylorSeries r(0.0, 1, 3);
  r.at(1, 1) = 1.0;
  EXPECT_THROW(solve_cohomological(r, identity_model()), ContractError);
}

TEST(Series, ModelValidation) {
  SymbolModel m;
  m.g = TaylorSeries({0.1, 1.0});
  EXPECT_THROW(m.validate(), ContractError);
  m.g = TaylorSeries({0.0, 0.0, 1.0});
  EXPECT_THROW(m.validate(), ContractError);
}

TEST(Potential, TrigConventionAndEvaluation) {
  const auto v = FourierPotential::from_trig(0.5, {1.0, 0.0}, {0.0, -2.0});
  EXPECT_EQ(v.cut(), 2);
  EXPECT_EQ(v[1], cplx(0.5, 0.0));
  EXPECT_EQ(v[-2], std::conj(v[2]));
  EXPECT_FALSE(v.is_constant());
  for (double th : {0.0, 0.7, 2.5})
    EXPECT_NEAR(v(th), 0.5 + std::cos(th) - 2.0 * std::sin(2 * th), 1e-14);
  EXPECT_TRUE(FourierPotential(3.0).is_constant());
  EXPECT_DOUBLE_EQ(FourierPotential(3.0).mean(), 3.0);
}
