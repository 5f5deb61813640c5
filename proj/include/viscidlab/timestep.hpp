#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "viscidlab/biot_savart.hpp"
#include "viscidlab/camp_norms.hpp"
#include "viscidlab/grid.hpp"
#include "viscidlab/parallel.hpp"
#include "viscidlab/spectral.hpp"

namespace viscidlab {

/// Courant number used for every advective step: dt * max|u| <= kCfl * h.
inline constexpr double kCfl = 0.5;

class CflError : public std::runtime_error {
 public:
  CflError(double max_speed, double dt, double spacing, long subinterval = -1)
      : std::runtime_error(describe(max_speed, dt, spacing, subinterval)),
        max_speed_(max_speed),
        dt_(dt),
        subinterval_(subinterval) {}

  double max_speed() const { return max_speed_; }
  double dt() const { return dt_; }
  long subinterval() const { return subinterval_; }

 private:
  static std::string describe(double u, double dt, double h, long sub) {
    std::ostringstream s;
    s << "CFL violation: max|u| = " << u << ", dt = " << dt << ", dt*max|u| = " << u * dt << " > " << kCfl
      << "*h = " << kCfl * h;
    if (sub >= 0) s << " (subinterval " << sub << ")";
    return s.str();
  }
  double max_speed_;
  double dt_;
  long subinterval_;
};

/// Exact fractional heat semigroup: multiplies w_hat by exp(-nu |k|^sigma dt).
inline ScalarField heat_step(const ScalarField& w, double nu, double dt, double sigma = 2.0) {
  if (nu < 0.0) throw std::invalid_argument("heat_step: nu must be >= 0");
  if (dt < 0.0) throw std::invalid_argument("heat_step: dt must be >= 0");
  if (!(sigma > 0.0 && sigma <= 2.0)) throw std::invalid_argument("heat_step: sigma must lie in (0, 2]");
  if (!std::isfinite(nu * dt)) throw std::invalid_argument("heat_step: nu*dt must be finite");
  if (nu * dt == 0.0) return w;
  const auto& g = w.grid();
  auto W = to_spectral(w);
  const double mean = W.raw(0, 0).real();
  auto out = W.apply([&](long k1, long k2) {
    const double k = std::sqrt(wavenumber_squared(g, k1, k2));
    return Complex(std::exp(-nu * std::pow(k, sigma) * dt), 0.0);
  });
  out.raw(0, 0) = Complex(mean, 0.0);
  return from_spectral(out);
}

namespace detail {

struct AdvectionWork {
  double max_speed = 0.0;
};

// -speed * (u . grad w) in spectral form, with u from Biot-Savart of w.
inline SpectralField advection_rhs(const SpectralField& W, double speed, bool dealias, AdvectionWork* work) {
  const auto& g = W.grid();
  const auto u = velocity_spectrum(W);
  auto derive = [&](int axis) {
    return from_spectral(W.apply([&](long k1, long k2) {
      return Complex(0.0, derivative_wavenumber(g, axis == 0 ? k1 : k2));
    }));
  };
  const auto u1 = from_spectral(u[0]);
  const auto u2 = from_spectral(u[1]);
  const auto w1 = derive(0);
  const auto w2 = derive(1);
  ScalarField prod(g);
  auto& pv = prod.values();
  const auto &a = u1.values(), &b = u2.values(), &c = w1.values(), &d = w2.values();
  double vmax = 0.0;
  for (std::size_t k = 0; k < pv.size(); ++k) {
    pv[k] = -speed * (a[k] * c[k] + b[k] * d[k]);
    vmax = std::max(vmax, std::hypot(a[k], b[k]));
  }
  if (work) work->max_speed = vmax;
  auto R = to_spectral(prod);
  if (dealias) dealias_in_place(R);
  // Transport by a divergence-free field conserves the mean exactly.
  R.raw(0, 0) = Complex(0.0, 0.0);
  return R;
}

inline SpectralField axpy(const SpectralField& x, double a, const SpectralField& y) {
  SpectralField out = x;
  auto& o = out.data();
  const auto& v = y.data();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] += a * v[k];
  return out;
}

inline SpectralField euler_step_spectral(const SpectralField& W, double dt, double speed, bool dealias) {
  const auto& g = W.grid();
  AdvectionWork work;
  const auto k1 = advection_rhs(W, speed, dealias, &work);
  if (dt * speed * work.max_speed > kCfl * g.spacing() * (1.0 + 1e-12))
    throw CflError(speed * work.max_speed, dt, g.spacing());
  const auto k2 = advection_rhs(axpy(W, 0.5 * dt, k1), speed, dealias, nullptr);
  const auto k3 = advection_rhs(axpy(W, 0.5 * dt, k2), speed, dealias, nullptr);
  const auto k4 = advection_rhs(axpy(W, dt, k3), speed, dealias, nullptr);
  SpectralField out = W;
  auto& o = out.data();
  const auto &a = k1.data(), &b = k2.data(), &c = k3.data(), &d = k4.data();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] += (dt / 6.0) * (a[k] + 2.0 * b[k] + 2.0 * c[k] + d[k]);
  return out;
}

}  // namespace detail

/// Largest advective speed max|u| of the Biot-Savart velocity of w.
inline double max_velocity(const ScalarField& w) { return velocity_from_vorticity(w).max_magnitude(); }

/// One classical RK4 step of dw/dt = -speed_factor (u . grad w), u refreshed
/// from w at every stage.
inline ScalarField euler_step(const ScalarField& w, double dt, double speed_factor = 1.0, bool dealias = true) {
  if (!(dt >= 0.0)) throw std::invalid_argument("euler_step: dt must be >= 0");
  if (dt == 0.0) return w;
  return from_spectral(detail::euler_step_spectral(to_spectral(w), dt, speed_factor, dealias));
}

/// Strang splitting heat(dt/2) o euler(dt) o heat(dt/2).
inline ScalarField ns_step(const ScalarField& w, double epsilon, double dt, double sigma = 2.0, bool dealias = true) {
  if (epsilon < 0.0) throw std::invalid_argument("ns_step: epsilon must be >= 0");
  auto a = heat_step(w, epsilon, 0.5 * dt, sigma);
  auto b = euler_step(a, dt, 1.0, dealias);
  return heat_step(b, epsilon, 0.5 * dt, sigma);
}

/// Integrates Navier-Stokes (epsilon > 0) or Euler (epsilon = 0) from t = 0 to
/// horizon with uniform steps no larger than max_dt. The observer, when set,
/// sees (t, w) at t = 0 and after every step.
inline ScalarField integrate_ns(const ScalarField& w0, double epsilon, double horizon, double max_dt,
                                double sigma = 2.0, bool dealias = true,
                                const std::function<void(double, const ScalarField&)>& observer = {}) {
  if (!(horizon >= 0.0) || !(max_dt > 0.0)) throw std::invalid_argument("integrate_ns: need horizon >= 0, dt > 0");
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / max_dt - 1e-9));
  ScalarField w = w0;
  if (observer) observer(0.0, w);
  if (steps == 0) return w;
  const double dt = horizon / static_cast<double>(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    w = ns_step(w, epsilon, dt, sigma, dealias);
    if (observer) observer(dt * static_cast<double>(s + 1), w);
  }
  return w;
}

struct SchemeConfig {
  double epsilon = 0.0;
  double horizon = 1.0;
  std::size_t n_subintervals = 2;
  double inner_dt = 0.01;
  bool dealias = true;
  double fractional_sigma = 2.0;

  double subinterval() const { return horizon / static_cast<double>(n_subintervals); }

  void validate() const {
    if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");
    if (n_subintervals == 0 || n_subintervals % 2 != 0)
      throw std::invalid_argument("n_subintervals must be a positive even integer");
    if (!(inner_dt > 0.0)) throw std::invalid_argument("inner_dt must be > 0");
    if (inner_dt > subinterval() / 4.0 * (1.0 + 1e-12))
      throw std::invalid_argument("inner_dt must be <= (T/n)/4");
    if (!(fractional_sigma > 0.0 && fractional_sigma <= 2.0))
      throw std::invalid_argument("fractional_sigma must lie in (0, 2]");
  }
};

enum class StageTag { heat, euler };

inline const char* to_string(StageTag t) { return t == StageTag::heat ? "heat" : "euler"; }

/// Tracking norm used for the scheme's uniform bound: ||w||_{L^p} plus the
/// discrete L^alpha mo norm on a fixed family.
struct TrackingNorm {
  double p = 4.0 / 3.0;
  double alpha = 2.0;
  std::size_t stride = 0;
  int jmax = 0;

  double operator()(const ScalarField& w) const {
    const auto fam = make_ball_family(w.grid(), stride, jmax);
    return w.lp_norm(p) + lamo_norm(w, alpha, fam).value;
  }
};

struct TrotterTrajectory {
  std::vector<double> times;            // T_i, i = 0..n
  std::vector<ScalarField> snapshots;   // w^n(T_i)
  std::vector<StageTag> stage_tags;     // stage on [T_i, T_{i+1}], i = 0..n-1
  std::vector<double> norm_history;     // tracking norm at T_i

  /// X_k = max over i <= k of norm_history[i].
  std::vector<double> running_sup() const {
    std::vector<double> x(norm_history.size());
    double m = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = m = std::max(m, norm_history[k]);
    return x;
  }

  const ScalarField& final_state() const { return snapshots.back(); }
};

/// Alternating scheme on T_i = i T/n: even i runs the heat semigroup with
/// coefficient 2 epsilon, odd i runs Euler transport at doubled speed,
/// sub-stepped at no more than inner_dt.
template <typename Tracker = TrackingNorm>
TrotterTrajectory trotter_run(const ScalarField& w0, const SchemeConfig& cfg, const Tracker& tracker = Tracker{},
                              bool keep_snapshots = true) {
  cfg.validate();
  TrotterTrajectory tr;
  const double h = cfg.subinterval();
  ScalarField w = w0;
  tr.times.push_back(0.0);
  tr.snapshots.push_back(w);
  tr.norm_history.push_back(tracker(w));
  const auto substeps = static_cast<std::size_t>(std::ceil(h / cfg.inner_dt - 1e-9));
  const double dt = h / static_cast<double>(substeps);
  for (std::size_t i = 0; i < cfg.n_subintervals; ++i) {
    if (i % 2 == 0) {
      tr.stage_tags.push_back(StageTag::heat);
      w = heat_step(w, 2.0 * cfg.epsilon, h, cfg.fractional_sigma);
    } else {
      tr.stage_tags.push_back(StageTag::euler);
      try {
        auto W = to_spectral(w);
        for (std::size_t s = 0; s < substeps; ++s) W = detail::euler_step_spectral(W, dt, 2.0, cfg.dealias);
        w = from_spectral(W);
      } catch (const CflError& e) {
        throw CflError(e.max_speed(), e.dt(), w.grid().spacing(), static_cast<long>(i));
      }
    }
    tr.times.push_back(h * static_cast<double>(i + 1));
    if (keep_snapshots || i + 1 == cfg.n_subintervals) tr.snapshots.push_back(w);
    tr.norm_history.push_back(tracker(w));
  }
  return tr;
}

struct TrotterErrorRow {
  std::size_t n = 0;
  double error = 0.0;
};

struct TrotterComparison {
  std::vector<TrotterErrorRow> rows;
  double fitted_order = std::numeric_limits<double>::quiet_NaN();
  double reference_dt = 0.0;
  ScalarField reference;
};

/// Least-squares slope of log(error) against log(n); returned as a positive
/// order when errors shrink with n.
inline double convergence_order(const std::vector<TrotterErrorRow>& rows) {
  std::vector<double> x, y;
  for (const auto& r : rows) {
    if (r.error > 0.0) {
      x.push_back(std::log(static_cast<double>(r.n)));
      y.push_back(std::log(r.error));
    }
  }
  if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  return -fit_line(x, y).slope;
}

/// L2 distance between the split solution at T and a Strang-split reference
/// run at reference_dt, for every n in n_list. Runs over n are independent.
inline TrotterComparison trotter_vs_ns(const ScalarField& w0, const SchemeConfig& cfg,
                                       const std::vector<std::size_t>& n_list, double reference_dt = 0.0) {
  if (n_list.empty()) throw std::invalid_argument("n_list must not be empty");
  for (auto n : n_list)
    if (n == 0 || n % 2 != 0) throw std::invalid_argument("n_subintervals must be a positive even integer");
  if (reference_dt <= 0.0) reference_dt = 0.25 * cfg.inner_dt;
  TrotterComparison out{{}, std::numeric_limits<double>::quiet_NaN(), reference_dt,
                        integrate_ns(w0, cfg.epsilon, cfg.horizon, reference_dt, cfg.fractional_sigma, cfg.dealias)};
  out.rows.resize(n_list.size());
  auto no_track = [](const ScalarField&) { return 0.0; };
  parallel_for(n_list.size(), [&](std::size_t k) {
    SchemeConfig c = cfg;
    c.n_subintervals = n_list[k];
    c.inner_dt = std::min(cfg.inner_dt, c.subinterval() / 4.0);
    const auto tr = trotter_run(w0, c, no_track, false);
    out.rows[k] = {n_list[k], (tr.final_state() - out.reference).l2_norm()};
  });
  out.fitted_order = convergence_order(out.rows);
  return out;
}

/// Recurrence constant mu_hat: the largest ln(X_{k+1}/X_k) / (X_k h) over
/// Euler stages, using the running sup X. Zero when no stage grows.
inline double fit_recurrence_constant(const TrotterTrajectory& tr) {
  const auto x = tr.running_sup();
  double mu = 0.0;
  for (std::size_t k = 0; k < tr.stage_tags.size(); ++k) {
    if (tr.stage_tags[k] != StageTag::euler || x[k] <= 0.0) continue;
    const double h = tr.times[k + 1] - tr.times[k];
    mu = std::max(mu, std::log(x[k + 1] / x[k]) / (x[k] * h));
  }
  return mu;
}

}  // namespace viscidlab
