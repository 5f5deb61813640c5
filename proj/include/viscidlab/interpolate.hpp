#pragma once

#include <array>
#include <cmath>

#include "viscidlab/grid.hpp"

namespace viscidlab {

struct Vec2 {
  double x1 = 0.0;
  double x2 = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x1 + b.x1, a.x2 + b.x2}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x1 - b.x1, a.x2 - b.x2}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x1, s * a.x2}; }
  double norm() const { return std::hypot(x1, x2); }
};

inline double wrap_coordinate(double x, double length) {
  double r = std::fmod(x, length);
  if (r < 0.0) r += length;
  if (r >= length) r -= length;
  return r;
}

inline Vec2 wrap_point(Vec2 p, double length) {
  return {wrap_coordinate(p.x1, length), wrap_coordinate(p.x2, length)};
}

/// Shortest displacement b - a on the torus.
inline Vec2 torus_displacement(Vec2 a, Vec2 b, double length) {
  auto fold = [length](double d) {
    d = std::fmod(d, length);
    if (d > 0.5 * length) d -= length;
    if (d < -0.5 * length) d += length;
    return d;
  };
  return {fold(b.x1 - a.x1), fold(b.x2 - a.x2)};
}

inline double torus_distance(Vec2 a, Vec2 b, double length) { return torus_displacement(a, b, length).norm(); }

namespace detail {
// Keys cubic convolution weights (a = -1/2) for fractional offset t in [0,1).
inline std::array<double, 4> cubic_weights(double t) {
  const double t2 = t * t, t3 = t2 * t;
  return {-0.5 * t3 + t2 - 0.5 * t, 1.5 * t3 - 2.5 * t2 + 1.0, -1.5 * t3 + 2.0 * t2 + 0.5 * t, 0.5 * t3 - 0.5 * t2};
}
}  // namespace detail

/// Periodic bicubic (cubic convolution) interpolation of a field at p.
inline double interpolate_bicubic(const ScalarField& f, Vec2 p) {
  const auto& g = f.grid();
  const double s1 = wrap_coordinate(p.x1, g.length()) / g.spacing();
  const double s2 = wrap_coordinate(p.x2, g.length()) / g.spacing();
  const double f1 = std::floor(s1), f2 = std::floor(s2);
  const auto w1 = detail::cubic_weights(s1 - f1);
  const auto w2 = detail::cubic_weights(s2 - f2);
  const long i0 = static_cast<long>(f1) - 1, j0 = static_cast<long>(f2) - 1;
  double acc = 0.0;
  for (int a = 0; a < 4; ++a) {
    double row = 0.0;
    for (int b = 0; b < 4; ++b) row += w2[b] * f.at_wrapped(i0 + a, j0 + b);
    acc += w1[a] * row;
  }
  return acc;
}

inline Vec2 interpolate_bicubic(const VectorField& u, Vec2 p) {
  return {interpolate_bicubic(u.u1, p), interpolate_bicubic(u.u2, p)};
}

}  // namespace viscidlab
