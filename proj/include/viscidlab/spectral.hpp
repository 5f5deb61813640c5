#pragma once

#include <fftw3.h>

#include <cstring>
#include <map>
#include <memory>
#include <mutex>

#include "viscidlab/grid.hpp"

namespace viscidlab {

namespace detail {

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

template <typename T>
using FftwArray = std::unique_ptr<T[], FftwDeleter>;

template <typename T>
FftwArray<T> fftw_array(std::size_t count) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * count));
  if (p == nullptr) throw std::bad_alloc();
  return FftwArray<T>(p);
}

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

// Plan creation is not thread-safe in FFTW; execution through the new-array
// interface is. Plans are built once per size with FFTW_ESTIMATE so every
// process picks the same algorithm and results are reproducible.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  PlanPair get(std::size_t n) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    const int ni = static_cast<int>(n);
    auto real = fftw_array<double>(n * n);
    auto spec = fftw_array<fftw_complex>(n * (n / 2 + 1));
    PlanPair p;
    p.forward = fftw_plan_dft_r2c_2d(ni, ni, real.get(), spec.get(), FFTW_ESTIMATE);
    p.backward = fftw_plan_dft_c2r_2d(ni, ni, spec.get(), real.get(), FFTW_ESTIMATE);
    plans_.emplace(n, p);
    return p;
  }

  ~PlanCache() {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.backward);
    }
  }

 private:
  PlanCache() = default;
  std::mutex mutex_;
  std::map<std::size_t, PlanPair> plans_;
};

}  // namespace detail

/// Forward transform with mean-preserving normalization: c_k = (1/N) sum f e^{-ik.x}.
inline SpectralField to_spectral(const ScalarField& f) {
  const auto& g = f.grid();
  const std::size_t n = g.size();
  const auto plans = detail::PlanCache::instance().get(n);
  auto real = detail::fftw_array<double>(n * n);
  auto spec = detail::fftw_array<fftw_complex>(n * (n / 2 + 1));
  std::memcpy(real.get(), f.values().data(), sizeof(double) * n * n);
  fftw_execute_dft_r2c(plans.forward, real.get(), spec.get());
  SpectralField out(g);
  const double scale = 1.0 / static_cast<double>(n * n);
  auto& data = out.data();
  for (std::size_t k = 0; k < data.size(); ++k) data[k] = Complex(spec[k][0] * scale, spec[k][1] * scale);
  return out;
}

/// Inverse of to_spectral. The result is validated as finite.
inline ScalarField from_spectral(const SpectralField& F) {
  const auto& g = F.grid();
  const std::size_t n = g.size();
  const auto plans = detail::PlanCache::instance().get(n);
  auto real = detail::fftw_array<double>(n * n);
  auto spec = detail::fftw_array<fftw_complex>(n * (n / 2 + 1));
  const auto& data = F.data();
  for (std::size_t k = 0; k < data.size(); ++k) {
    spec[k][0] = data[k].real();
    spec[k][1] = data[k].imag();
  }
  fftw_execute_dft_c2r(plans.backward, spec.get(), real.get());
  ScalarField out(g);
  std::memcpy(out.values().data(), real.get(), sizeof(double) * n * n);
  out.check_finite();
  return out;
}

/// Zeroes every mode with |k1| or |k2| above n/3 (two-thirds rule).
inline void dealias_in_place(SpectralField& F) {
  const auto& g = F.grid();
  const long cutoff = static_cast<long>(g.size()) / 3;
  for (std::size_t i = 0; i < F.size(); ++i) {
    const long k1 = g.signed_index(i);
    for (std::size_t j = 0; j < F.half(); ++j) {
      if (std::abs(k1) > cutoff || static_cast<long>(j) > cutoff) F.raw(i, j) = Complex(0.0, 0.0);
    }
  }
}

/// Removes the Nyquist row and column, leaving a field every odd-order
/// spectral derivative can represent exactly.
inline ScalarField remove_nyquist(const ScalarField& f) {
  auto F = to_spectral(f);
  const std::size_t n = F.size();
  for (std::size_t j = 0; j < F.half(); ++j) F.raw(n / 2, j) = Complex(0.0, 0.0);
  for (std::size_t i = 0; i < n; ++i) F.raw(i, n / 2) = Complex(0.0, 0.0);
  return from_spectral(F);
}

}  // namespace viscidlab
