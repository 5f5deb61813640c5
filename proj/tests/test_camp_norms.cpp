#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "viscidlab/camp_norms.hpp"
#include "viscidlab/initial_data.hpp"
#include "viscidlab/timestep.hpp"

using namespace viscidlab;
constexpr double kPi = std::numbers::pi;

namespace {
ScalarField constant(const PeriodicGrid& g, double c) {
  return sample_function(g, [c](double, double) { return c; });
}

// Mean oscillation of f(x) = x1 on a continuum disk of radius r, by midpoint
// quadrature over the bounding square.
double disk_oscillation_x1(double r, double q) {
  const int m = 2000;
  const double h = 2.0 * r / m;
  double acc = 0.0, area = 0.0;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      const double x = -r + (a + 0.5) * h, y = -r + (b + 0.5) * h;
      if (x * x + y * y > r * r) continue;
      acc += std::pow(std::abs(x), q);
      area += 1.0;
    }
  return std::pow(acc / area, 1.0 / q);
}
}  // namespace

TEST(Oscillation, ConstantIsZero) {
  const auto g = make_grid(64);
  EXPECT_NEAR(oscillation(constant(g, 2.5), {10, 20, 0.5}), 0.0, 1e-14);
}

TEST(Oscillation, LinearFunctionAgainstContinuumQuadrature) {
  const auto g = make_grid(512);
  const auto f = sample_function(g, [](double x1, double) { return x1; });
  for (double r : {0.25, 0.5}) {
    const Ball b{256, 100, r};
    const double q1 = oscillation(f, b, 1.0);
    const double q2 = oscillation(f, b, 2.0);
    EXPECT_NEAR(q1 / disk_oscillation_x1(r, 1.0), 1.0, 0.02) << r;
    EXPECT_NEAR(q2 / disk_oscillation_x1(r, 2.0), 1.0, 0.02) << r;
    // closed forms of the same quadratures
    EXPECT_NEAR(disk_oscillation_x1(r, 1.0), 4.0 * r / (3.0 * kPi), 1e-4 * r);
    EXPECT_NEAR(disk_oscillation_x1(r, 2.0), r / 2.0, 1e-4 * r);
  }
}

TEST(Oscillation, StepAcrossBallIsNearOne) {
  const auto g = make_grid(256);
  const double v = oscillation(sign_step(g), {128, 40, 0.5});
  EXPECT_GT(v, 0.99);
  EXPECT_LE(v, 1.0);
  EXPECT_THROW(oscillation(sign_step(g), {128, 40, 0.5}, 0.5), std::invalid_argument);
}

TEST(BallFamily, ResolutionFloorAndStride) {
  const auto g = make_grid(256);
  const auto fam = make_ball_family(g);
  EXPECT_EQ(fam.stride(), 4u);
  for (double r : fam.radii()) EXPECT_GE(r, 4.0 * g.spacing());
  EXPECT_EQ(fam.radii().front(), 0.5);
  EXPECT_THROW(make_ball_family(make_grid(16), 1, 3), std::invalid_argument);
  EXPECT_THROW(BallFamily(g, 3, 1, 2), std::invalid_argument);
  for (const auto& s : fam.stencils()) EXPECT_GE(s.count, kMinBallNodes);
}

TEST(Lamo, ConstantHasAbsoluteValue) {
  const auto g = make_grid(128);
  const auto fam = make_ball_family(g);
  for (double c : {0.0, -3.0, 0.75}) {
    const auto e = lamo_norm(constant(g, c), 1.0, fam);
    EXPECT_NEAR(e.homogeneous, 0.0, 1e-13);
    EXPECT_NEAR(e.value, std::abs(c), 1e-13);
    EXPECT_NEAR(bmo_norm(constant(g, c), fam).value, 0.0, 1e-13);
  }
  EXPECT_THROW(lamo_norm(constant(g, 1.0), -0.5, fam), std::invalid_argument);
}

TEST(Lamo, SignStepDivergesWithJmaxButBmoStaysBounded) {
  const auto g = make_grid(512);
  const auto f = sign_step(g);
  double prev = 0.0;
  for (int jmax = 2; jmax <= max_dyadic_exponent(g); ++jmax) {
    const auto fam = make_ball_family(g, 0, jmax);
    const double v = lamo_norm(f, 1.0, fam).value;
    EXPECT_GT(v, prev) << jmax;
    prev = v;
    EXPECT_LE(bmo_norm(f, fam).value, 1.0 + 1e-12);
  }
}

TEST(Lamo, MonotoneInAlphaForSmallRadii) {
  const auto g = make_grid(256);
  const auto fam = make_ball_family(g, 0, 0, 2);  // radii <= 1/4 < 1/e
  const auto f = random_seeded(g, 17, 20, 1.0);
  double prev = 0.0;
  for (double a : {0.0, 0.25, 0.5, 1.0, 2.0}) {
    const double v = lamo_norm(f, a, fam).value;
    EXPECT_GE(v, prev - 1e-14) << a;
    prev = v;
  }
}

TEST(Lamo, HeatFlowDoesNotIncrease) {
  const auto g = make_grid(128);
  const auto fam = make_ball_family(g);
  const auto f = sign_step(g);
  const double before = lamo_norm(f, 1.0, fam).value;
  for (double t : {0.01, 0.1, 0.5}) EXPECT_LE(lamo_norm(heat_step(f, 1.0, t), 1.0, fam).value, 1.02 * before) << t;
}

TEST(Lbmo, ConstantAndStep) {
  const auto g = make_grid(128);
  const auto fam = make_ball_family(g, 4);
  const auto c = lbmo_norm(constant(g, 2.0), fam);
  EXPECT_NEAR(c.value, 0.0, 1e-13);
  const auto s = lbmo_norm(sign_step(g), fam);
  EXPECT_GT(s.pair_sup, 0.0);
  EXPECT_LE(s.pair_sup, 2.0);
  EXPECT_LE(s.bmo, 1.0 + 1e-12);
  EXPECT_NEAR(s.value, s.bmo + s.pair_sup, 1e-15);
  EXPECT_LE(2.0 * s.inner.radius, s.outer.radius);
}

TEST(Lbl, ConstantAndShearVelocity) {
  const auto g = make_grid(128);
  const VectorField c(constant(g, 0.6), constant(g, -0.8));
  const auto e = lbl_modulus(c, 0.5);
  EXPECT_NEAR(e.quotient_sup, 0.0, 1e-14);
  EXPECT_NEAR(e.value, 1.0, 1e-14);
  const VectorField s(ScalarField(g), sample_function(g, [](double x1, double) { return std::sin(x1); }));
  // Lipschitz constant 1 plus sup 1.
  EXPECT_NEAR(lbl_modulus(s, 0.0).value, 2.0, 0.02);
  EXPECT_THROW(lbl_modulus(s, 1.5), std::invalid_argument);
}

TEST(JohnNirenberg, TailsOfSimpleFields) {
  const auto g = make_grid(256);
  const Ball q{128, 128, 0.5};
  const std::vector<double> lambdas{0.1, 0.5, 1.0, 1.5, 2.0};
  const auto c = john_nirenberg_profile(constant(g, 1.0), q, 0.0, lambdas);
  for (double fr : c.fractions) EXPECT_EQ(fr, 0.0);
  const auto s = john_nirenberg_profile(sign_step(g), q, 0.5, lambdas);
  EXPECT_EQ(s.exponent, 2.0);
  for (std::size_t k = 1; k < s.fractions.size(); ++k) EXPECT_LE(s.fractions[k], s.fractions[k - 1]);
  EXPECT_EQ(s.fractions.back(), 0.0);
  EXPECT_THROW(john_nirenberg_profile(sign_step(g), q, 1.0, lambdas), std::invalid_argument);
  EXPECT_THROW(john_nirenberg_profile(sign_step(g), q, 0.0, {1.0, 0.5}), std::invalid_argument);
}

TEST(Interpolation, ZeroAndCosine) {
  const auto g = make_grid(128);
  const auto fam = make_ball_family(g);
  const auto z = interpolation_check(ScalarField(g), {2.0, 4.0, 8.0}, fam);
  for (const auto& r : z.rows) EXPECT_EQ(r.ratio, 0.0);
  const auto c = interpolation_check(sample_function(g, [](double x1, double) { return std::cos(x1); }),
                                     {2.0, 4.0, 8.0, 16.0}, fam, 0.5);
  for (std::size_t k = 1; k < c.rows.size(); ++k) EXPECT_LT(c.rows[k].ratio, c.rows[k - 1].ratio);
  EXPECT_THROW(interpolation_check(ScalarField(g), {1.5}, fam), std::invalid_argument);
}

TEST(LatticeMaps, BilipschitzConstants) {
  EXPECT_DOUBLE_EQ(bilipschitz_constant(LatticeMap{Translation{3, 4}}), 1.0);
  EXPECT_DOUBLE_EQ(bilipschitz_constant(LatticeMap{QuarterRotation{1}}), 1.0);
  EXPECT_NEAR(bilipschitz_constant(LatticeMap{IntegerShear{1, 1, 0, 1}}), (1 + std::sqrt(5.0)) / 2, 1e-14);
  EXPECT_NEAR(bilipschitz_constant(LatticeMap{IntegerShear{1, 2, 0, 1}}), 1 + std::sqrt(2.0), 1e-14);
  const auto g = make_grid(16);
  EXPECT_THROW(compose(ScalarField(g), IntegerShear{2, 0, 0, 1}), std::invalid_argument);
}

TEST(LatticeMaps, ComposeIsPermutation) {
  const auto g = make_grid(32);
  const auto f = random_seeded(g, 1);
  for (const LatticeMap& m : {LatticeMap{Translation{5, -3}}, LatticeMap{QuarterRotation{3}},
                              LatticeMap{IntegerShear{1, 1, 0, 1}}}) {
    auto a = compose(f, m).values();
    auto b = f.values();
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
  }
  const auto r = compose(f, QuarterRotation{1});
  EXPECT_EQ(r(1, 2), f.at_wrapped(-2, 1));
}

TEST(Composition, IsometriesPreserveNorms) {
  const auto g = make_grid(128);
  const auto fam = make_ball_family(g);
  const auto f = lmo_exemplar(g);
  for (const LatticeMap& m : {LatticeMap{Translation{8, 6}}, LatticeMap{QuarterRotation{1}}})
    for (auto kind : {NormKind::bmo, NormKind::lamo, NormKind::lbmo}) {
      const auto r = composition_ratio(f, m, kind, 0.5, fam);
      EXPECT_NEAR(r.ratio, 1.0, 1e-12) << to_string(kind);
      EXPECT_EQ(r.bilipschitz, 1.0);
    }
}

TEST(DyadicDecay, KnownSeries) {
  const auto g = make_grid(128);
  EXPECT_NEAR(dyadic_decay_check(sample_function(g, [](double x1, double) { return std::cos(x1); }), 1.0).value, 1.0,
              1e-12);
  const auto f = sample_function(g, [](double x1, double) {
    double s = 0.0;
    for (int m = 1; m <= 5; ++m) s += std::cos(std::ldexp(1.0, m) * x1) / (1.0 + m);
    return s;
  });
  const auto d = dyadic_decay_check(f, 1.0);
  EXPECT_NEAR(d.value, 1.0, 1e-10);
  for (const auto& [n, w] : d.weighted)
    if (n >= 1 && n <= 5) EXPECT_NEAR(w, 1.0, 1e-10);
  EXPECT_EQ(dyadic_decay_check(ScalarField(g), 1.0).value, 0.0);
}

TEST(Helpers, FitLineAndNormKinds) {
  const auto fit = fit_line({0.0, 1.0, 2.0, 3.0}, {1.0, 3.0, 5.0, 7.0});
  EXPECT_NEAR(fit.slope, 2.0, 1e-15);
  EXPECT_NEAR(fit.intercept, 1.0, 1e-15);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-15);
  for (auto k : {NormKind::bmo, NormKind::lamo, NormKind::lbmo, NormKind::lamo_lp})
    EXPECT_EQ(norm_kind_from_string(to_string(k)), k);
  EXPECT_THROW(norm_kind_from_string("sobolev"), std::invalid_argument);
  const auto g = make_grid(128);
  const auto rep = norm_report(sign_step(g), make_ball_family(g), {2.0}, {0.0, 1.0});
  const auto j = to_json(rep);
  EXPECT_EQ(j.at("lamo").size(), 2u);
  EXPECT_TRUE(j.contains("lbmo"));
  EXPECT_NEAR(j.at("sup").get<double>(), 1.0, 0.0);
}
