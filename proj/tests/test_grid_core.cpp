#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <random>

#include "viscidlab/grid.hpp"
#include "viscidlab/initial_data.hpp"
#include "viscidlab/io.hpp"
#include "viscidlab/spectral.hpp"

using namespace viscidlab;
constexpr double kPi = std::numbers::pi;

namespace {
ScalarField noise(const PeriodicGrid& g, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  ScalarField f(g);
  for (auto& v : f.values()) v = d(rng);
  return f;
}
}  // namespace

TEST(MakeGrid, SpacingFromDefinition) {
  const auto g = make_grid(64);
  EXPECT_DOUBLE_EQ(g.spacing(), 2.0 * kPi / 64.0);
  EXPECT_NEAR(g.spacing() * 64.0, g.length(), 1e-15);
  EXPECT_DOUBLE_EQ(make_grid(8, 1.0).spacing(), 0.125);
}

TEST(MakeGrid, RejectsBadInput) {
  try {
    make_grid(7);
    FAIL() << "n = 7 accepted";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("n must be power of two"), std::string::npos);
  }
  EXPECT_THROW(make_grid(100), std::invalid_argument);
  EXPECT_THROW(make_grid(4), std::invalid_argument);
  EXPECT_THROW(make_grid(16, 0.0), std::invalid_argument);
  EXPECT_THROW(make_grid(16, -1.0), std::invalid_argument);
}

TEST(Spectral, ConstantFieldHasOnlyMean) {
  const auto g = make_grid(16);
  const auto F = to_spectral(sample_function(g, [](double, double) { return 1.0; }));
  for (long k1 = -7; k1 <= 8; ++k1)
    for (long k2 = -7; k2 <= 8; ++k2) {
      const auto c = F.coefficient(k1, k2);
      if (k1 == 0 && k2 == 0) {
        EXPECT_NEAR(c.real(), 1.0, 1e-15);
        EXPECT_NEAR(c.imag(), 0.0, 1e-15);
      } else {
        EXPECT_LT(std::abs(c), 1e-15);
      }
    }
}

TEST(Spectral, CosineHasHalfCoefficients) {
  const auto g = make_grid(16);
  const auto F = to_spectral(sample_function(g, [](double x1, double) { return std::cos(x1); }));
  for (long k1 = -7; k1 <= 8; ++k1)
    for (long k2 = -7; k2 <= 8; ++k2) {
      const double expect = (std::abs(k1) == 1 && k2 == 0) ? 0.5 : 0.0;
      EXPECT_NEAR(std::abs(F.coefficient(k1, k2) - std::complex<double>(expect, 0.0)), 0.0, 1e-15)
          << k1 << "," << k2;
    }
}

TEST(Spectral, RoundTripRandom) {
  const auto g = make_grid(16);
  const auto f = noise(g, 1);
  EXPECT_LT(relative_l2_error(from_spectral(to_spectral(f)), f), 1e-12);
}

TEST(Spectral, ParsevalAndConjugateSymmetry) {
  for (std::size_t n : {16u, 64u, 256u}) {
    const auto g = make_grid(n);
    const auto f = noise(g, static_cast<unsigned>(n));
    const auto F = to_spectral(f);
    // Independent oracle: sum |c_k|^2 over the full spectrum times |domain|.
    double s = 0.0;
    const long h = static_cast<long>(n) / 2;
    for (long k1 = -h + 1; k1 <= h; ++k1)
      for (long k2 = -h + 1; k2 <= h; ++k2) s += std::norm(F.coefficient(k1, k2));
    const double spectral = std::sqrt(s) * g.length();
    EXPECT_NEAR(spectral / f.l2_norm(), 1.0, 1e-12);
    EXPECT_NEAR(F.l2_norm() / f.l2_norm(), 1.0, 1e-12);
    for (long k1 : {-3L, 2L, 5L})
      for (long k2 : {1L, 4L})
        EXPECT_LT(std::abs(F.coefficient(-k1, -k2) - std::conj(F.coefficient(k1, k2))), 1e-14);
  }
}

TEST(SampleFunction, ZeroAndCosine) {
  const auto g = make_grid(32);
  EXPECT_EQ(sample_function(g, [](double, double) { return 0.0; }).max_abs(), 0.0);
  const auto c = sample_function(g, [](double x1, double x2) { return std::cos(x1) * std::sin(2 * x2); });
  for (std::size_t i = 0; i < 32; i += 5)
    for (std::size_t j = 0; j < 32; j += 3)
      EXPECT_DOUBLE_EQ(c(i, j), std::cos(g.coord(i)) * std::sin(2 * g.coord(j)));
}

TEST(SampleFunction, NonFiniteReportsCoordinates) {
  const auto g = make_grid(8);
  try {
    sample_function(g, [](double x1, double x2) { return x1 == 0.0 && x2 == 0.0 ? std::log(0.0) : 1.0; });
    FAIL() << "non-finite sample accepted";
  } catch (const NonFiniteError& e) {
    EXPECT_NE(std::string(e.what()).find("(0, 0)"), std::string::npos);
  }
  std::vector<double> v(64, 0.0);
  v[5] = std::nan("");
  EXPECT_THROW(ScalarField(g, v), NonFiniteError);
}

TEST(SampleFunction, LmoExemplarClampedAtCentre) {
  for (std::size_t n : {64u, 256u}) {
    const auto g = make_grid(n);
    const auto f = lmo_exemplar(g);
    const double h = g.spacing();
    EXPECT_DOUBLE_EQ(f(n / 2, n / 2), std::log(1.0 - std::log(h / 2.0)));
    EXPECT_DOUBLE_EQ(f.max_abs(), lmo_exemplar_peak(g));
    EXPECT_DOUBLE_EQ(f(n / 2 + 1, n / 2), std::log(1.0 - std::log(h)));
    EXPECT_EQ(f(0, 0), 0.0);
  }
}

TEST(FieldDump, RoundTripIsBitExact) {
  const auto g = make_grid(16, 3.0);
  const auto f = noise(g, 9);
  const auto path = std::filesystem::temp_directory_path() / "viscidlab_grid_test.fld";
  write_field(path, f, {{"name", "noise"}, {"t", 0.25}});
  const auto back = read_field(path);
  EXPECT_EQ(back.field.values(), f.values());
  EXPECT_EQ(back.meta.at("n").get<int>(), 16);
  EXPECT_DOUBLE_EQ(back.meta.at("length").get<double>(), 3.0);
  EXPECT_EQ(back.meta.at("name").get<std::string>(), "noise");
  const auto raw = read_text(path);
  EXPECT_EQ(raw.size() - raw.find('\n') - 1, 16u * 16u * 8u);
  std::filesystem::remove(path);
}

TEST(FieldOps, NormsOfKnownFields) {
  const auto g = make_grid(64);
  const auto c = sample_function(g, [](double x1, double) { return std::cos(x1); });
  // ||cos||_{L2}^2 over the 2pi torus is 2 pi^2.
  EXPECT_NEAR(c.l2_norm(), std::sqrt(2.0) * kPi, 1e-12);
  EXPECT_NEAR(c.mean(), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(c.lp_norm(std::numeric_limits<double>::infinity()), 1.0);
}
