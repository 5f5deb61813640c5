#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "viscidlab/biot_savart.hpp"
#include "viscidlab/initial_data.hpp"

using namespace viscidlab;

namespace {
double max_diff(const ScalarField& a, const ScalarField& b) { return (a - b).max_abs(); }
}  // namespace

TEST(BiotSavart, ZeroVorticity) {
  const auto g = make_grid(32);
  const auto u = velocity_from_vorticity(ScalarField(g));
  EXPECT_EQ(u.max_magnitude(), 0.0);
}

TEST(BiotSavart, ShearVelocity) {
  const auto g = make_grid(32);
  const auto u = velocity_from_vorticity(sample_function(g, [](double x1, double) { return std::cos(x1); }));
  EXPECT_LT(u.u1.max_abs(), 1e-14);
  EXPECT_LT(max_diff(u.u2, sample_function(g, [](double x1, double) { return std::sin(x1); })), 1e-14);
}

TEST(BiotSavart, TaylorGreenVelocity) {
  const auto g = make_grid(32);
  const auto u = velocity_from_vorticity(taylor_green(g));
  EXPECT_LT(max_diff(u.u1, sample_function(g, [](double a, double b) { return std::cos(a) * std::sin(b); })), 1e-14);
  EXPECT_LT(max_diff(u.u2, sample_function(g, [](double a, double b) { return -std::sin(a) * std::cos(b); })), 1e-14);
}

TEST(Curl, ShearAndConstantGradient) {
  const auto g = make_grid(32);
  VectorField u(ScalarField(g), sample_function(g, [](double x1, double) { return std::sin(x1); }));
  EXPECT_LT(max_diff(curl(u), sample_function(g, [](double x1, double) { return std::cos(x1); })), 1e-13);
  const auto gr = gradient(sample_function(g, [](double, double) { return 3.5; }));
  EXPECT_LT(gr.max_magnitude(), 1e-14);
}

TEST(Curl, RoundTripOnRandomVorticity) {
  const auto g = make_grid(32);
  const auto w = random_seeded(g, 11, 10);
  const auto shifted = w + sample_function(g, [](double, double) { return 0.7; });
  const auto back = curl(velocity_from_vorticity(shifted));
  // curl(BS(w)) = w - mean(w)
  EXPECT_LT(relative_l2_error(back, w), 1e-10);
}

TEST(BiotSavart, DivergenceFreeAndPlancherel) {
  const auto g = make_grid(64);
  const auto w = random_seeded(g, 5, 12, 1.0);
  const auto u = velocity_from_vorticity(w);
  const auto W = to_spectral(w);
  double wmax = 0.0, s = 0.0;
  const long h = 32;
  for (long k1 = -h + 1; k1 <= h; ++k1)
    for (long k2 = -h + 1; k2 <= h; ++k2) {
      const auto c = W.coefficient(k1, k2);
      wmax = std::max(wmax, std::abs(c));
      if (k1 || k2) s += std::norm(c) / static_cast<double>(k1 * k1 + k2 * k2);
    }
  EXPECT_LE(spectral_divergence_sup(u), 1e-12 * wmax);
  // ||u||^2 = |T^2| sum |w_k|^2 / |k|^2 on the 2pi torus.
  const double energy = std::pow(u.u1.l2_norm(), 2) + std::pow(u.u2.l2_norm(), 2);
  EXPECT_NEAR(energy / (s * g.length() * g.length()), 1.0, 1e-12);
  EXPECT_LT(divergence(u).max_abs(), 1e-12);
}

TEST(RieszGradient, ShearComponents) {
  const auto g = make_grid(32);
  const auto c = sample_function(g, [](double x1, double) { return std::cos(x1); });
  const auto du = riesz_gradient(c);
  EXPECT_LT(max_diff(du.du2_dx1, c), 1e-13);
  EXPECT_LT(du.du1_dx1.max_abs(), 1e-14);
  EXPECT_LT(du.du1_dx2.max_abs(), 1e-14);
  EXPECT_LT(du.du2_dx2.max_abs(), 1e-14);
  EXPECT_NEAR(du.lipschitz(), 1.0, 1e-13);
  const auto z = riesz_gradient(ScalarField(g));
  EXPECT_EQ(z.l2_norm(), 0.0);
}

TEST(RieszGradient, TraceFreeAndIsometric) {
  const auto g = make_grid(64);
  const auto w = random_seeded(g, 21, 12);
  const auto du = riesz_gradient(w);
  EXPECT_LT((du.du1_dx1 + du.du2_dx2).max_abs(), 1e-10);
  EXPECT_NEAR(du.l2_norm() / w.l2_norm(), 1.0, 1e-10);
}

TEST(Dyadic, SingleBlockForCos4) {
  const auto g = make_grid(64);
  const auto blocks = dyadic_decompose(sample_function(g, [](double x1, double) { return std::cos(4 * x1); }));
  for (const auto& b : blocks) {
    if (b.index == 2) EXPECT_NEAR(b.sup, 1.0, 1e-13);
    else EXPECT_LT(b.sup, 1e-13) << "block " << b.index;
  }
}

TEST(Dyadic, ConstantIsMeanBlock) {
  const auto g = make_grid(32);
  for (const auto& b : dyadic_decompose(sample_function(g, [](double, double) { return 2.0; }))) {
    if (b.index == -1) EXPECT_NEAR(b.sup, 2.0, 1e-14);
    else EXPECT_LT(b.sup, 1e-14);
  }
}

TEST(Dyadic, HarmonicSumRecoversSupsAndReconstructs) {
  const auto g = make_grid(128);
  const auto f = sample_function(g, [](double x1, double) {
    double s = 0.0;
    for (int m = 1; m <= 5; ++m) s += std::cos(std::ldexp(1.0, m) * x1) / m;
    return s;
  });
  const auto blocks = dyadic_decompose(f);
  ScalarField sum(g);
  for (const auto& b : blocks) {
    sum += b.field;
    if (b.index >= 1 && b.index <= 5) EXPECT_NEAR(b.sup, 1.0 / b.index, 1e-10);
    else EXPECT_LT(b.sup, 1e-12);
  }
  EXPECT_LT(relative_l2_error(sum, f), 1e-12);
}

TEST(Dyadic, IndexBoundaries) {
  EXPECT_EQ(dyadic_index(0, 0), -1);
  EXPECT_EQ(dyadic_index(1, 0), 0);
  EXPECT_EQ(dyadic_index(1, 1), 0);
  EXPECT_EQ(dyadic_index(2, 0), 1);
  EXPECT_EQ(dyadic_index(3, 3), 2);  // |k| = 4.24
  EXPECT_EQ(dyadic_index(8, 0), 3);
}
