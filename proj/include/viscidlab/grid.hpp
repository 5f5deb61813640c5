#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace viscidlab {

using Complex = std::complex<double>;

/// Raised when a field would carry NaN or Inf samples.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniform n x n grid on the torus [0, L)^2.
class PeriodicGrid {
 public:
  PeriodicGrid(std::size_t n, double length) : n_(n), length_(length) {
    if (n < 8 || (n & (n - 1)) != 0) throw std::invalid_argument("n must be power of two (and >= 8)");
    if (!(length > 0.0) || !std::isfinite(length)) throw std::invalid_argument("domain length must be > 0");
    spacing_ = length_ / static_cast<double>(n_);
  }

  std::size_t size() const { return n_; }
  std::size_t node_count() const { return n_ * n_; }
  double length() const { return length_; }
  double spacing() const { return spacing_; }
  double cell_area() const { return spacing_ * spacing_; }
  double coord(std::size_t i) const { return spacing_ * static_cast<double>(i); }

  /// Angular wavenumber of one Fourier index, 2*pi/L per unit.
  double wavenumber_unit() const { return 2.0 * std::numbers::pi / length_; }

  /// Signed integer wavenumber for FFT index i along a full axis.
  long signed_index(std::size_t i) const {
    return i <= n_ / 2 ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(n_);
  }

  std::size_t wrap(long i) const {
    const long n = static_cast<long>(n_);
    long r = i % n;
    if (r < 0) r += n;
    return static_cast<std::size_t>(r);
  }

  friend bool operator==(const PeriodicGrid& a, const PeriodicGrid& b) {
    return a.n_ == b.n_ && a.length_ == b.length_;
  }

 private:
  std::size_t n_;
  double length_;
  double spacing_;
};

inline PeriodicGrid make_grid(std::size_t n, double length = 2.0 * std::numbers::pi) {
  return PeriodicGrid(n, length);
}

/// Physical samples of a scalar on a PeriodicGrid. Storage is row-major with
/// the row index running along x1: value(i, j) = f(i*h, j*h).
class ScalarField {
 public:
  explicit ScalarField(const PeriodicGrid& grid) : grid_(grid), values_(grid.node_count(), 0.0) {}

  ScalarField(const PeriodicGrid& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.node_count()) throw std::invalid_argument("field size does not match grid");
    check_finite();
  }

  const PeriodicGrid& grid() const { return grid_; }
  std::size_t size() const { return grid_.size(); }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  double operator()(std::size_t i, std::size_t j) const { return values_[i * grid_.size() + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * grid_.size() + j]; }

  /// Value at a node given by possibly out-of-range integer indices.
  double at_wrapped(long i, long j) const { return (*this)(grid_.wrap(i), grid_.wrap(j)); }

  void check_finite() const {
    for (std::size_t k = 0; k < values_.size(); ++k) {
      if (!std::isfinite(values_[k])) {
        std::ostringstream msg;
        msg << "non-finite field value at node (" << k / grid_.size() << ", " << k % grid_.size() << ")";
        throw NonFiniteError(msg.str());
      }
    }
  }

  double mean() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s / static_cast<double>(values_.size());
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  double max() const { return *std::max_element(values_.begin(), values_.end()); }

  /// Discrete L^p norm (sum |f|^p h^2)^(1/p); p = infinity gives the sup.
  double lp_norm(double p) const {
    if (std::isinf(p)) return max_abs();
    if (!(p > 0.0)) throw std::invalid_argument("lp_norm requires p > 0");
    double s = 0.0;
    if (p == 2.0) {
      for (double v : values_) s += v * v;
    } else {
      for (double v : values_) s += std::pow(std::abs(v), p);
    }
    return std::pow(s * grid_.cell_area(), 1.0 / p);
  }

  double l2_norm() const { return lp_norm(2.0); }

  ScalarField& operator+=(const ScalarField& o) {
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
    return *this;
  }
  ScalarField& operator-=(const ScalarField& o) {
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
    return *this;
  }
  ScalarField& operator*=(double a) {
    for (double& v : values_) v *= a;
    return *this;
  }
  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }

 private:
  PeriodicGrid grid_;
  std::vector<double> values_;
};

/// Two-component field; u1 and u2 share one grid.
struct VectorField {
  ScalarField u1;
  ScalarField u2;

  explicit VectorField(const PeriodicGrid& grid) : u1(grid), u2(grid) {}
  VectorField(ScalarField a, ScalarField b) : u1(std::move(a)), u2(std::move(b)) {
    if (!(u1.grid() == u2.grid())) throw std::invalid_argument("vector components on different grids");
  }

  const PeriodicGrid& grid() const { return u1.grid(); }

  double l2_norm() const {
    const double a = u1.l2_norm();
    const double b = u2.l2_norm();
    return std::sqrt(a * a + b * b);
  }

  /// Largest pointwise Euclidean magnitude.
  double max_magnitude() const {
    double m = 0.0;
    const auto& a = u1.values();
    const auto& b = u2.values();
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::hypot(a[k], b[k]));
    return m;
  }
};

/// Fourier coefficients of a real field, normalized so coefficient(0,0) is the
/// field mean. Only the half spectrum k2 >= 0 is stored; the other half is
/// implied by conjugate symmetry.
class SpectralField {
 public:
  explicit SpectralField(const PeriodicGrid& grid)
      : grid_(grid), data_(grid.size() * (grid.size() / 2 + 1), Complex(0.0, 0.0)) {}

  const PeriodicGrid& grid() const { return grid_; }
  std::size_t size() const { return grid_.size(); }
  std::size_t half() const { return grid_.size() / 2 + 1; }

  /// Storage accessor: row i covers k1 = signed_index(i), column j is k2 = j.
  Complex& raw(std::size_t i, std::size_t j) { return data_[i * half() + j]; }
  const Complex& raw(std::size_t i, std::size_t j) const { return data_[i * half() + j]; }
  std::vector<Complex>& data() { return data_; }
  const std::vector<Complex>& data() const { return data_; }

  /// Coefficient for integer wavevector (k1, k2), |k_i| <= n/2.
  Complex coefficient(long k1, long k2) const {
    const long n = static_cast<long>(size());
    if (std::abs(k1) > n / 2 || std::abs(k2) > n / 2) throw std::out_of_range("wavevector outside resolved band");
    if (k2 < 0) return std::conj(raw(grid_.wrap(-k1), static_cast<std::size_t>(-k2)));
    return raw(grid_.wrap(k1), static_cast<std::size_t>(k2));
  }

  /// Weight of a stored column in full-spectrum sums.
  double column_weight(std::size_t j) const { return (j == 0 || j == size() / 2) ? 1.0 : 2.0; }

  /// sqrt(sum over the full spectrum of |c_k|^2) scaled by L, which equals the
  /// physical L2 norm by Parseval.
  double l2_norm() const {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = 0; j < half(); ++j) s += column_weight(j) * std::norm(raw(i, j));
    return grid_.length() * std::sqrt(s);
  }

  /// Largest |c_k| over the stored half spectrum.
  double max_abs() const {
    double m = 0.0;
    for (const auto& c : data_) m = std::max(m, std::abs(c));
    return m;
  }

  /// Applies a multiplier m(k1, k2) given signed integer wavevector indices.
  template <typename Multiplier>
  SpectralField apply(Multiplier&& m) const {
    SpectralField out(grid_);
    for (std::size_t i = 0; i < size(); ++i) {
      const long k1 = grid_.signed_index(i);
      for (std::size_t j = 0; j < half(); ++j) {
        out.raw(i, j) = m(k1, static_cast<long>(j)) * raw(i, j);
      }
    }
    return out;
  }

  SpectralField& operator+=(const SpectralField& o) {
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  SpectralField& operator*=(double a) {
    for (auto& c : data_) c *= a;
    return *this;
  }

 private:
  PeriodicGrid grid_;
  std::vector<Complex> data_;
};

/// Axis wavenumber used by odd-order derivatives: the Nyquist index has no
/// real-valued derivative and is mapped to zero.
inline double derivative_wavenumber(const PeriodicGrid& g, long k) {
  const long n = static_cast<long>(g.size());
  if (std::abs(k) == n / 2) return 0.0;
  return g.wavenumber_unit() * static_cast<double>(k);
}

inline double wavenumber_squared(const PeriodicGrid& g, long k1, long k2) {
  const double u = g.wavenumber_unit();
  return u * u * static_cast<double>(k1 * k1 + k2 * k2);
}

/// Samples g(x1, x2) at every node. Non-finite samples are rejected with the
/// offending coordinates.
template <typename Fn>
ScalarField sample_function(const PeriodicGrid& grid, Fn&& g) {
  ScalarField f(grid);
  const std::size_t n = grid.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double x1 = grid.coord(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double x2 = grid.coord(j);
      const double v = g(x1, x2);
      if (!std::isfinite(v)) {
        std::ostringstream msg;
        msg << "non-finite sample at (" << x1 << ", " << x2 << ")";
        throw NonFiniteError(msg.str());
      }
      f(i, j) = v;
    }
  }
  return f;
}

inline double relative_l2_error(const ScalarField& a, const ScalarField& reference) {
  const double denom = reference.l2_norm();
  const double err = (a - reference).l2_norm();
  return denom > 0.0 ? err / denom : err;
}

}  // namespace viscidlab
