#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "viscidlab/grid.hpp"
#include "viscidlab/spectral.hpp"

namespace viscidlab {

/// Spectral velocity of a vorticity spectrum: u_hat = i (k2, -k1) w_hat / |k|^2,
/// zero mode dropped. Returned as a pair of spectra (u1_hat, u2_hat).
inline std::array<SpectralField, 2> velocity_spectrum(const SpectralField& w) {
  const auto& g = w.grid();
  std::array<SpectralField, 2> u{SpectralField(g), SpectralField(g)};
  for (std::size_t i = 0; i < w.size(); ++i) {
    const long k1 = g.signed_index(i);
    const double d1 = derivative_wavenumber(g, k1);
    for (std::size_t j = 0; j < w.half(); ++j) {
      const long k2 = static_cast<long>(j);
      if (k1 == 0 && k2 == 0) continue;
      const double d2 = derivative_wavenumber(g, k2);
      const Complex psi = w.raw(i, j) / wavenumber_squared(g, k1, k2);
      u[0].raw(i, j) = Complex(0.0, d2) * psi;
      u[1].raw(i, j) = Complex(0.0, -d1) * psi;
    }
  }
  return u;
}

/// Biot-Savart law on the torus. The vorticity mean has no velocity
/// counterpart and is discarded.
inline VectorField velocity_from_vorticity(const ScalarField& w) {
  const auto u = velocity_spectrum(to_spectral(w));
  return VectorField(from_spectral(u[0]), from_spectral(u[1]));
}

inline ScalarField partial_derivative(const ScalarField& f, int axis) {
  const auto& g = f.grid();
  const auto F = to_spectral(f);
  return from_spectral(F.apply([&](long k1, long k2) {
    return Complex(0.0, derivative_wavenumber(g, axis == 0 ? k1 : k2));
  }));
}

inline VectorField gradient(const ScalarField& f) {
  return VectorField(partial_derivative(f, 0), partial_derivative(f, 1));
}

/// curl u = d1 u2 - d2 u1.
inline ScalarField curl(const VectorField& u) {
  const auto& g = u.grid();
  const auto U1 = to_spectral(u.u1);
  const auto U2 = to_spectral(u.u2);
  SpectralField W(g);
  for (std::size_t i = 0; i < W.size(); ++i) {
    const double d1 = derivative_wavenumber(g, g.signed_index(i));
    for (std::size_t j = 0; j < W.half(); ++j) {
      const double d2 = derivative_wavenumber(g, static_cast<long>(j));
      W.raw(i, j) = Complex(0.0, d1) * U2.raw(i, j) - Complex(0.0, d2) * U1.raw(i, j);
    }
  }
  return from_spectral(W);
}

inline ScalarField divergence(const VectorField& u) {
  const auto& g = u.grid();
  const auto U1 = to_spectral(u.u1);
  const auto U2 = to_spectral(u.u2);
  SpectralField D(g);
  for (std::size_t i = 0; i < D.size(); ++i) {
    const double d1 = derivative_wavenumber(g, g.signed_index(i));
    for (std::size_t j = 0; j < D.half(); ++j) {
      const double d2 = derivative_wavenumber(g, static_cast<long>(j));
      D.raw(i, j) = Complex(0.0, d1) * U1.raw(i, j) + Complex(0.0, d2) * U2.raw(i, j);
    }
  }
  return from_spectral(D);
}

/// sup_k |k . u_hat(k)| over the spectrum.
inline double spectral_divergence_sup(const VectorField& u) {
  const auto& g = u.grid();
  const auto U1 = to_spectral(u.u1);
  const auto U2 = to_spectral(u.u2);
  double m = 0.0;
  for (std::size_t i = 0; i < U1.size(); ++i) {
    const double d1 = derivative_wavenumber(g, g.signed_index(i));
    for (std::size_t j = 0; j < U1.half(); ++j) {
      const double d2 = derivative_wavenumber(g, static_cast<long>(j));
      m = std::max(m, std::abs(d1 * U1.raw(i, j) + d2 * U2.raw(i, j)));
    }
  }
  return m;
}

/// Velocity gradient d_i u_j recovered from vorticity through Riesz-type
/// multipliers (i k_i)(i (k2, -k1)_j) / |k|^2.
struct VelocityGradient {
  ScalarField du1_dx1;
  ScalarField du2_dx1;
  ScalarField du1_dx2;
  ScalarField du2_dx2;

  /// Operator 2-norm of the 2x2 Jacobian at node k.
  double operator_norm_at(std::size_t k) const {
    const double a = du1_dx1.values()[k], b = du1_dx2.values()[k];
    const double c = du2_dx1.values()[k], d = du2_dx2.values()[k];
    // Largest singular value of [[a, b], [c, d]].
    const double s = a * a + b * b + c * c + d * d;
    const double det = a * d - b * c;
    const double disc = std::sqrt(std::max(0.0, s * s - 4.0 * det * det));
    return std::sqrt(0.5 * (s + disc));
  }

  /// sup over nodes of |grad u|; a discrete Lipschitz constant of u.
  double lipschitz() const {
    double m = 0.0;
    for (std::size_t k = 0; k < du1_dx1.values().size(); ++k) m = std::max(m, operator_norm_at(k));
    return m;
  }

  double l2_norm() const {
    const double a = du1_dx1.l2_norm(), b = du2_dx1.l2_norm();
    const double c = du1_dx2.l2_norm(), d = du2_dx2.l2_norm();
    return std::sqrt(a * a + b * b + c * c + d * d);
  }
};

inline VelocityGradient riesz_gradient(const ScalarField& w) {
  const auto& g = w.grid();
  const auto u = velocity_spectrum(to_spectral(w));
  auto derive = [&](const SpectralField& U, int axis) {
    return from_spectral(U.apply([&](long k1, long k2) {
      return Complex(0.0, derivative_wavenumber(g, axis == 0 ? k1 : k2));
    }));
  };
  return VelocityGradient{derive(u[0], 0), derive(u[1], 0), derive(u[0], 1), derive(u[1], 1)};
}

/// One sharp annular frequency band: block n covers 2^n <= |k| < 2^(n+1),
/// block -1 is the mean.
struct DyadicBlock {
  int index;
  ScalarField field;
  double sup;
};

inline int dyadic_index(long k1, long k2) {
  const long q = k1 * k1 + k2 * k2;
  if (q == 0) return -1;
  // Largest n with 4^n <= q, evaluated exactly on integers.
  int n = 0;
  while ((1L << (2 * (n + 1))) <= q) ++n;
  return n;
}

inline std::vector<DyadicBlock> dyadic_decompose(const ScalarField& f) {
  const auto F = to_spectral(f);
  const auto& g = f.grid();
  const long kmax = static_cast<long>(g.size()) / 2;
  const int top = dyadic_index(kmax, kmax);
  std::vector<DyadicBlock> blocks;
  for (int b = -1; b <= top; ++b) {
    auto B = F.apply([&](long k1, long k2) { return Complex(dyadic_index(k1, k2) == b ? 1.0 : 0.0, 0.0); });
    auto field = from_spectral(B);
    const double sup = field.max_abs();
    blocks.push_back(DyadicBlock{b, std::move(field), sup});
  }
  return blocks;
}

}  // namespace viscidlab
