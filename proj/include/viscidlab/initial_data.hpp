#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "viscidlab/grid.hpp"

namespace viscidlab {

/// -2 A cos(k x1) cos(k x2) with k = 2 pi / L. Under NS it decays as
/// exp(-2 k^2 eps t) and is a steady Euler state.
inline ScalarField taylor_green(const PeriodicGrid& g, double amplitude = 1.0) {
  const double k = g.wavenumber_unit();
  return sample_function(g, [&](double x1, double x2) { return -2.0 * amplitude * std::cos(k * x1) * std::cos(k * x2); });
}

inline ScalarField taylor_green_exact(const PeriodicGrid& g, double epsilon, double t, double amplitude = 1.0) {
  const double k = g.wavenumber_unit();
  return std::exp(-2.0 * k * k * epsilon * t) * taylor_green(g, amplitude);
}

/// A cos(k x1): steady under Euler.
inline ScalarField shear(const PeriodicGrid& g, double amplitude = 1.0) {
  const double k = g.wavenumber_unit();
  return sample_function(g, [&](double x1, double) { return amplitude * std::cos(k * x1); });
}

struct PatchParams {
  double strength = 1.0;
  double radius = 0.5;
  double width = 0.0;   // mollification length; 0 selects two grid spacings
  double aspect = 2.0;  // semi-axis ratio; 1 gives a circular patch
};

/// Smoothed elliptic vortex patch centred in the box:
/// A/2 erfc((r_e - R) / (sqrt 2 w)) with r_e = sqrt(x1^2 / aspect + x2^2 aspect).
inline ScalarField mollified_patch(const PeriodicGrid& g, const PatchParams& p = {}) {
  if (!(p.radius > 0.0) || !(p.aspect > 0.0) || p.width < 0.0) throw std::invalid_argument("bad patch parameters");
  const double w = p.width > 0.0 ? p.width : 2.0 * g.spacing();
  const double c = 0.5 * g.length();
  return sample_function(g, [&](double x1, double x2) {
    const double y1 = x1 - c, y2 = x2 - c;
    const double re = std::sqrt(y1 * y1 / p.aspect + y2 * y2 * p.aspect);
    return 0.5 * p.strength * std::erfc((re - p.radius) / (std::sqrt(2.0) * w));
  });
}

/// log(1 - log|x|) on the unit disc around the node nearest the box centre,
/// zero outside. The centre node takes the value at radius h/2.
inline ScalarField lmo_exemplar(const PeriodicGrid& g) {
  const std::size_t mid = g.size() / 2;
  const double c = g.coord(mid);
  const double r0 = 0.5 * g.spacing();
  return sample_function(g, [&](double x1, double x2) {
    const double r = std::max(std::hypot(x1 - c, x2 - c), r0);
    return r <= 1.0 ? std::log(1.0 - std::log(r)) : 0.0;
  });
}

/// Largest node value of the exemplar; it grows like log(1 - log(h/2)).
inline double lmo_exemplar_peak(const PeriodicGrid& g) { return std::log(1.0 - std::log(0.5 * g.spacing())); }

/// +1 on the left half of the box, -1 on the right half.
inline ScalarField sign_step(const PeriodicGrid& g) {
  const double half = 0.5 * g.length();
  return sample_function(g, [&](double x1, double) { return x1 < half - 1e-12 ? 1.0 : -1.0; });
}

/// Random band-limited field: Fourier modes with max(|k1|, |k2|) <= kmax get
/// Gaussian amplitudes scaled by (1 + |k|^2)^{-decay/2}. No Nyquist content.
inline ScalarField random_seeded(const PeriodicGrid& g, std::uint64_t seed, long kmax = 0, double decay = 2.0,
                                 double amplitude = 1.0) {
  const long n = static_cast<long>(g.size());
  if (kmax <= 0) kmax = n / 8;
  if (kmax >= n / 2) throw std::invalid_argument("random_seeded: kmax must be below the Nyquist index");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  struct Mode {
    long k1, k2;
    double a, b;
  };
  std::vector<Mode> modes;
  for (long k1 = 0; k1 <= kmax; ++k1)
    for (long k2 = -kmax; k2 <= kmax; ++k2) {
      if (k1 == 0 && k2 <= 0) continue;
      const double s = amplitude * std::pow(1.0 + static_cast<double>(k1 * k1 + k2 * k2), -0.5 * decay);
      const double a = normal(rng) * s;
      const double b = normal(rng) * s;
      modes.push_back({k1, k2, a, b});
    }
  const double u = g.wavenumber_unit();
  return sample_function(g, [&](double x1, double x2) {
    double v = 0.0;
    for (const auto& m : modes) {
      const double ph = u * (static_cast<double>(m.k1) * x1 + static_cast<double>(m.k2) * x2);
      v += m.a * std::cos(ph) + m.b * std::sin(ph);
    }
    return v;
  });
}

/// Builds initial vorticity from a name and a JSON parameter object.
inline ScalarField make_initial_data(const PeriodicGrid& g, const std::string& name, const nlohmann::json& params,
                                     std::uint64_t seed) {
  auto num = [&](const char* key, double def) { return params.contains(key) ? params.at(key).get<double>() : def; };
  if (name == "taylor_green") return taylor_green(g, num("amplitude", 1.0));
  if (name == "shear") return shear(g, num("amplitude", 1.0));
  if (name == "mollified_patch") {
    PatchParams p;
    p.strength = num("strength", p.strength);
    p.radius = num("radius", p.radius);
    p.width = num("width", p.width);
    p.aspect = num("aspect", p.aspect);
    return mollified_patch(g, p);
  }
  if (name == "lmo_exemplar") return lmo_exemplar(g);
  if (name == "sign_step") return sign_step(g);
  if (name == "random_seeded")
    return random_seeded(g, params.contains("seed") ? params.at("seed").get<std::uint64_t>() : seed,
                         static_cast<long>(num("kmax", 0.0)), num("decay", 2.0), num("amplitude", 1.0));
  throw std::invalid_argument("unknown initial data '" + name + "'");
}

}  // namespace viscidlab
