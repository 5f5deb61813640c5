#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "viscidlab/biot_savart.hpp"
#include "viscidlab/camp_norms.hpp"
#include "viscidlab/grid.hpp"
#include "viscidlab/interpolate.hpp"
#include "viscidlab/parallel.hpp"

namespace viscidlab {

/// A time-dependent velocity on the torus.
template <typename S>
concept VelocitySource = requires(const S& s, double t, Vec2 x) {
  { s.velocity(t, x) } -> std::convertible_to<Vec2>;
  { s.t_min() } -> std::convertible_to<double>;
  { s.t_max() } -> std::convertible_to<double>;
  { s.domain_length() } -> std::convertible_to<double>;
  { s.max_speed() } -> std::convertible_to<double>;
  { s.spacing() } -> std::convertible_to<double>;
};

/// Velocity given in closed form, e.g. a uniform translation.
class AnalyticVelocity {
 public:
  AnalyticVelocity(std::function<Vec2(double, Vec2)> fn, double length, double max_speed, double spacing,
                   double t_min = -std::numeric_limits<double>::infinity(),
                   double t_max = std::numeric_limits<double>::infinity())
      : fn_(std::move(fn)), length_(length), max_speed_(max_speed), spacing_(spacing), t_min_(t_min), t_max_(t_max) {}

  Vec2 velocity(double t, Vec2 x) const { return fn_(t, x); }
  double t_min() const { return t_min_; }
  double t_max() const { return t_max_; }
  double domain_length() const { return length_; }
  double max_speed() const { return max_speed_; }
  double spacing() const { return spacing_; }

 private:
  std::function<Vec2(double, Vec2)> fn_;
  double length_, max_speed_, spacing_, t_min_, t_max_;
};

/// Velocity snapshots on a grid: bicubic in space, linear in time.
class SnapshotVelocity {
 public:
  SnapshotVelocity(std::vector<double> times, std::vector<VectorField> fields)
      : times_(std::move(times)), fields_(std::move(fields)) {
    if (times_.empty() || times_.size() != fields_.size())
      throw std::invalid_argument("snapshot times and fields must match and be non-empty");
    for (std::size_t k = 1; k < times_.size(); ++k)
      if (!(times_[k] > times_[k - 1])) throw std::invalid_argument("snapshot times must increase");
    for (const auto& f : fields_) max_speed_ = std::max(max_speed_, f.max_magnitude());
  }

  /// Steady field valid for every time.
  static SnapshotVelocity steady(const VectorField& u) {
    SnapshotVelocity s({0.0}, {u});
    s.steady_ = true;
    return s;
  }

  Vec2 velocity(double t, Vec2 x) const {
    if (steady_ || times_.size() == 1) return interpolate_bicubic(fields_.front(), x);
    const double tol = 1e-12 * std::max(1.0, std::abs(times_.back()));
    if (t < times_.front() - tol || t > times_.back() + tol)
      throw std::out_of_range("velocity requested at t = " + std::to_string(t) + " outside snapshot range");
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    std::size_t hi = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - times_.begin(), times_.size() - 1));
    if (hi == 0) hi = 1;
    const std::size_t lo = hi - 1;
    const double s = std::clamp((t - times_[lo]) / (times_[hi] - times_[lo]), 0.0, 1.0);
    const Vec2 a = interpolate_bicubic(fields_[lo], x);
    const Vec2 b = interpolate_bicubic(fields_[hi], x);
    return (1.0 - s) * a + s * b;
  }

  double t_min() const { return steady_ ? -std::numeric_limits<double>::infinity() : times_.front(); }
  double t_max() const { return steady_ ? std::numeric_limits<double>::infinity() : times_.back(); }
  double domain_length() const { return fields_.front().grid().length(); }
  double max_speed() const { return max_speed_; }
  double spacing() const { return fields_.front().grid().spacing(); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<VectorField>& fields() const { return fields_; }

 private:
  std::vector<double> times_;
  std::vector<VectorField> fields_;
  double max_speed_ = 0.0;
  bool steady_ = false;
};

/// Same Courant number as the spectral steppers.
constexpr double kCflTracer() { return 0.5; }

enum class FlowDirection { forward, backward };

/// Tracer positions psi(t, x) at every recorded time, wrapped on the torus.
struct FlowMap {
  std::vector<Vec2> seeds;
  std::vector<double> times;
  std::vector<std::vector<Vec2>> positions;  // [time][seed]
  FlowDirection direction = FlowDirection::forward;
  double domain_length = 0.0;

  const std::vector<Vec2>& final_positions() const { return positions.back(); }
};

/// RK4 tracer integration from t0 to t1 (backward when t1 < t0) with steps of
/// at most dt. Positions are recorded every record_every steps and at t1.
template <VelocitySource Source>
FlowMap integrate_flow(const Source& src, const std::vector<Vec2>& seeds, double t0, double t1, double dt,
                       std::size_t record_every = 1) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_flow: dt must be > 0");
  if (std::min(t0, t1) < src.t_min() - 1e-12 || std::max(t0, t1) > src.t_max() + 1e-12)
    throw std::out_of_range("integrate_flow: requested interval outside the velocity's time range");
  const double span = std::abs(t1 - t0);
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(span / dt - 1e-9)));
  const double h = (t1 - t0) / static_cast<double>(steps);
  if (std::abs(h) * src.max_speed() > kCflTracer() * src.spacing() * (1.0 + 1e-12))
    throw std::invalid_argument("integrate_flow: dt*max|u| exceeds 0.5*spacing");
  const double L = src.domain_length();
  FlowMap fm;
  fm.seeds = seeds;
  fm.direction = t1 >= t0 ? FlowDirection::forward : FlowDirection::backward;
  fm.domain_length = L;
  std::vector<Vec2> x(seeds.size());
  for (std::size_t k = 0; k < seeds.size(); ++k) x[k] = wrap_point(seeds[k], L);
  fm.times.push_back(t0);
  fm.positions.push_back(x);
  for (std::size_t s = 0; s < steps; ++s) {
    const double t = t0 + h * static_cast<double>(s);
    const double tn = s + 1 == steps ? t1 : t + h;
    parallel_for(x.size(), [&](std::size_t k) {
      const Vec2 p = x[k];
      const Vec2 k1 = src.velocity(t, p);
      const Vec2 k2 = src.velocity(t + 0.5 * h, p + (0.5 * h) * k1);
      const Vec2 k3 = src.velocity(t + 0.5 * h, p + (0.5 * h) * k2);
      const Vec2 k4 = src.velocity(tn, p + h * k3);
      x[k] = wrap_point(p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), L);
    });
    if ((s + 1) % record_every == 0 || s + 1 == steps) {
      fm.times.push_back(tn);
      fm.positions.push_back(x);
    }
  }
  return fm;
}

struct BilipschitzEstimate {
  double value = 1.0;  // sampled lower bound of K_phi
  std::size_t pairs = 0;
  std::size_t seeds = 0;
};

/// Sampled K_phi = sup max(|phi x - phi y| / |x - y|, |x - y| / |phi x - phi y|)
/// over seed pairs with torus distance <= max_separation (default L/4).
/// Coincident seeds are skipped.
inline BilipschitzEstimate bilipschitz_constant(const std::vector<Vec2>& before, const std::vector<Vec2>& after,
                                                double length, std::optional<double> max_separation = std::nullopt) {
  if (before.size() != after.size()) throw std::invalid_argument("position lists differ in size");
  if (before.size() < 2) throw std::invalid_argument("need at least two seeds");
  const double cap = max_separation.value_or(0.25 * length);
  BilipschitzEstimate est;
  est.seeds = before.size();
  std::vector<double> best(before.size(), 1.0);
  std::vector<std::size_t> counts(before.size(), 0);
  parallel_for(before.size(), [&](std::size_t a) {
    for (std::size_t b = a + 1; b < before.size(); ++b) {
      const double d0 = torus_distance(before[a], before[b], length);
      if (d0 <= 0.0 || d0 > cap) continue;
      const double d1 = torus_distance(after[a], after[b], length);
      ++counts[a];
      const double r = d1 > 0.0 ? std::max(d1 / d0, d0 / d1) : std::numeric_limits<double>::infinity();
      best[a] = std::max(best[a], r);
    }
  });
  for (std::size_t a = 0; a < before.size(); ++a) {
    est.value = std::max(est.value, best[a]);
    est.pairs += counts[a];
  }
  return est;
}

inline BilipschitzEstimate bilipschitz_constant(const FlowMap& fm, std::size_t time_index) {
  return bilipschitz_constant(fm.seeds, fm.positions.at(time_index), fm.domain_length);
}

inline BilipschitzEstimate bilipschitz_constant(const FlowMap& fm) {
  return bilipschitz_constant(fm, fm.positions.size() - 1);
}

struct LipschitzBoundReport {
  double k_hat = 1.0;
  double v_hat = 0.0;
  double bound = 1.0;   // e^V
  double margin = 0.0;  // V (1 + tol) - log K
  bool holds = true;
};

/// Checks log K_hat <= V (1 + tolerance), i.e. K_hat <= e^{V (1 + tol)}.
inline LipschitzBoundReport lipschitz_bound_check(const FlowMap& fm, double v_t, double tolerance = 0.05,
                                                  std::optional<std::size_t> time_index = std::nullopt) {
  LipschitzBoundReport r;
  r.k_hat = bilipschitz_constant(fm, time_index.value_or(fm.positions.size() - 1)).value;
  r.v_hat = v_t;
  r.bound = std::exp(v_t);
  r.margin = v_t * (1.0 + tolerance) - std::log(r.k_hat);
  r.holds = r.margin >= -1e-12;
  return r;
}

/// Discrete ||u||_Lip = sup |grad u| computed from the vorticity.
inline double velocity_lipschitz(const ScalarField& vorticity) { return riesz_gradient(vorticity).lipschitz(); }

/// Cumulative trapezoid integral V(t_k) of samples (t_k, v_k).
inline std::vector<double> cumulative_integral(const std::vector<double>& t, const std::vector<double>& v) {
  if (t.size() != v.size()) throw std::invalid_argument("sample sizes differ");
  std::vector<double> out(t.size(), 0.0);
  for (std::size_t k = 1; k < t.size(); ++k) out[k] = out[k - 1] + 0.5 * (t[k] - t[k - 1]) * (v[k] + v[k - 1]);
  return out;
}

/// Seed set made of base points plus partners at dyadic separations 2^-j
/// (j = jmin..jmax) along the two axes.
struct PairedSeeds {
  std::vector<Vec2> seeds;
  struct Pair {
    std::size_t a, b;
    double separation;
  };
  std::vector<Pair> pairs;
  std::vector<double> separations;
};

inline PairedSeeds make_paired_seeds(const std::vector<Vec2>& bases, int jmin, int jmax, double length) {
  PairedSeeds ps;
  for (int j = jmin; j <= jmax; ++j) ps.separations.push_back(std::ldexp(1.0, -j));
  for (const auto& b : bases) {
    const std::size_t ia = ps.seeds.size();
    ps.seeds.push_back(wrap_point(b, length));
    for (double d : ps.separations) {
      for (Vec2 dir : {Vec2{1.0, 0.0}, Vec2{0.0, 1.0}}) {
        ps.pairs.push_back({ia, ps.seeds.size(), d});
        ps.seeds.push_back(wrap_point(b + d * dir, length));
      }
    }
  }
  return ps;
}

struct ModulusProfile {
  std::vector<double> separations;
  std::vector<double> growth;  // max final distance per bin
  std::vector<double> ratio;   // growth / d
  double fitted_eta_v = 0.0;
  std::vector<std::string> warnings;
};

/// Per-separation max growth and the slope through the origin of
/// log(growth/d) against |ln d|^(1-alpha).
inline ModulusProfile modulus_profile(const FlowMap& fm, const PairedSeeds& ps, double alpha) {
  ModulusProfile prof;
  const auto& fin = fm.final_positions();
  double sxy = 0.0, sxx = 0.0;
  for (double d : ps.separations) {
    double g = -1.0;
    for (const auto& p : ps.pairs)
      if (p.separation == d) g = std::max(g, torus_distance(fin[p.a], fin[p.b], fm.domain_length));
    if (g < 0.0) {
      prof.warnings.push_back("empty separation bin d = " + std::to_string(d));
      continue;
    }
    prof.separations.push_back(d);
    prof.growth.push_back(g);
    prof.ratio.push_back(g / d);
    const double x = std::pow(std::abs(std::log(d)), 1.0 - alpha);
    const double y = std::log(g / d);
    sxy += x * y;
    sxx += x * x;
  }
  prof.fitted_eta_v = sxx > 0.0 ? sxy / sxx : 0.0;
  return prof;
}

/// Signed areas of tracer triangles (a, b, c) using torus displacements.
inline std::vector<double> triangle_areas(const std::vector<Vec2>& pos,
                                          const std::vector<std::array<std::size_t, 3>>& tris, double length) {
  std::vector<double> out;
  out.reserve(tris.size());
  for (const auto& t : tris) {
    const Vec2 e1 = torus_displacement(pos[t[0]], pos[t[1]], length);
    const Vec2 e2 = torus_displacement(pos[t[0]], pos[t[2]], length);
    out.push_back(0.5 * (e1.x1 * e2.x2 - e1.x2 * e2.x1));
  }
  return out;
}

/// f o phi where phi is sampled at every grid node (positions[i*n + j] is the
/// image of node (i, j)); values come from bicubic interpolation of f.
inline ScalarField compose_with_positions(const ScalarField& f, const std::vector<Vec2>& images) {
  const auto& g = f.grid();
  if (images.size() != g.node_count()) throw std::invalid_argument("one image per grid node required");
  ScalarField out(g);
  auto& v = out.values();
  for (std::size_t k = 0; k < images.size(); ++k) v[k] = interpolate_bicubic(f, images[k]);
  return out;
}

inline std::vector<Vec2> grid_nodes(const PeriodicGrid& g) {
  std::vector<Vec2> pts;
  pts.reserve(g.node_count());
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) pts.push_back({g.coord(i), g.coord(j)});
  return pts;
}

}  // namespace viscidlab
