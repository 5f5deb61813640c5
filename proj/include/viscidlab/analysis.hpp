#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/lambert_w.hpp>
#include <boost/math/tools/roots.hpp>

#include "viscidlab/camp_norms.hpp"

namespace viscidlab {

/// exp(1 - e^{Ct}): exponent of the squared L2 error for LBMO data.
inline double beta_lbmo(double t, double c) {
  if (t < 0.0 || !(c > 0.0)) throw std::invalid_argument("beta_lbmo needs t >= 0 and C > 0");
  return std::exp(1.0 - std::exp(c * t));
}

/// max(1 - delta, (1 - (e^{C0 t} - 1)/2)^{1/delta}).
inline double beta_lmo(double t, double c0, double delta) {
  if (t < 0.0 || !(c0 > 0.0) || !(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("beta_lmo needs t >= 0, C0 > 0, delta in (0,1)");
  const double floor = 1.0 - delta;
  const double base = 1.0 - 0.5 * (std::exp(c0 * t) - 1.0);
  if (!(base > 0.0)) return floor;
  return std::max(floor, std::pow(base, 1.0 / delta));
}

/// 1 - sqrt(t) up to t = delta^2, then 1 - delta.
inline double alpha_schedule(double t, double delta) {
  if (t < 0.0 || !(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("alpha_schedule needs t >= 0, delta in (0,1)");
  return t <= delta * delta ? 1.0 - std::sqrt(t) : 1.0 - delta;
}

enum class CurveKind { beta_lbmo, beta_lmo, alpha_schedule, osgood_numeric };

inline const char* to_string(CurveKind k) {
  switch (k) {
    case CurveKind::beta_lbmo: return "beta_lbmo";
    case CurveKind::beta_lmo: return "beta_lmo";
    case CurveKind::alpha_schedule: return "alpha_schedule";
    case CurveKind::osgood_numeric: return "osgood_numeric";
  }
  return "?";
}

struct BoundCurve {
  CurveKind kind = CurveKind::beta_lbmo;
  std::map<std::string, double> params;
  std::vector<std::pair<double, double>> samples;
};

inline BoundCurve sample_curve(CurveKind kind, const std::map<std::string, double>& params,
                               const std::vector<double>& times) {
  BoundCurve c{kind, params, {}};
  auto get = [&](const char* key) {
    auto it = params.find(key);
    if (it == params.end()) throw std::invalid_argument(std::string("missing curve parameter ") + key);
    return it->second;
  };
  for (double t : times) {
    double v = 0.0;
    switch (kind) {
      case CurveKind::beta_lbmo: v = beta_lbmo(t, get("C")); break;
      case CurveKind::beta_lmo: v = beta_lmo(t, get("C0"), get("delta")); break;
      case CurveKind::alpha_schedule: v = alpha_schedule(t, get("delta")); break;
      case CurveKind::osgood_numeric: throw std::invalid_argument("use osgood_bound for numeric curves");
    }
    c.samples.emplace_back(t, v);
  }
  return c;
}

namespace detail {
inline double integrate(const std::function<double(double)>& f, double a, double b) {
  if (a == b) return 0.0;
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, 1e-13, &err);
}
}  // namespace detail

struct OsgoodResult {
  std::vector<std::pair<double, double>> samples;  // (t, rho_max) while the bound exists
  std::optional<double> void_beyond;               // first t at which the bound escapes
  std::string message;
};

/// Numeric Osgood bound: rho <= c + int gamma mu(rho) gives
/// rho(t) <= M^{-1}(M(c(t)) - int_{t0}^t gamma), M(x) = int_x^a dr / mu(r).
/// M is integrated in s = -ln r and inverted by bisection in s.
inline OsgoodResult osgood_bound(const std::function<double(double)>& c_of_t,
                                 const std::function<double(double)>& gamma_of_t,
                                 const std::function<double(double)>& mu_of_r, double a,
                                 const std::vector<double>& t_grid, double t0 = 0.0, double tol = 1e-10) {
  if (!(a > 0.0)) throw std::invalid_argument("osgood_bound: a must be > 0");
  const double s_a = -std::log(a);
  auto phi = [&](double s) {
    const double r = std::exp(-s);
    return r / mu_of_r(r);
  };
  auto m_of_s = [&](double s) { return detail::integrate(phi, s_a, s); };

  OsgoodResult out;
  for (double t : t_grid) {
    if (t < t0) throw std::invalid_argument("osgood_bound: t_grid must start at or after t0");
    const double c = c_of_t(t);
    if (c < 0.0) throw std::invalid_argument("osgood_bound: c(t) must be nonnegative");
    if (c == 0.0) {
      out.samples.emplace_back(t, 0.0);
      continue;
    }
    const double g = detail::integrate(gamma_of_t, t0, t);
    const double s_c = -std::log(c);
    if (s_c < s_a) {
      out.void_beyond = t;
      out.message = "bound void beyond t* = " + std::to_string(t) + " (c(t) exceeds a)";
      break;
    }
    const double target = m_of_s(s_c) - g;
    if (target < 0.0) {
      out.void_beyond = t;
      out.message = "bound void beyond t* = " + std::to_string(t);
      break;
    }
    // M(s) - target changes sign on [s_a, s_c].
    auto fn = [&](double s) { return m_of_s(s) - target; };
    auto stop = [tol](double lo, double hi) { return std::abs(hi - lo) <= tol * std::max(1.0, std::abs(lo)); };
    double s_root = s_c;
    if (g > 0.0) {
      const auto [lo, hi] = boost::math::tools::bisect(fn, s_a, s_c, stop);
      s_root = 0.5 * (lo + hi);
    }
    out.samples.emplace_back(t, std::exp(-s_root));
  }
  return out;
}

struct GronwallCheck {
  bool holds = true;
  double margin = std::numeric_limits<double>::infinity();  // min (A e^{2B sqrt t} - f) / A
};

/// f(t) <= A exp(2 B sqrt t) at every sample.
inline GronwallCheck gronwall_sqrt_check(const std::vector<std::pair<double, double>>& f_samples, double a, double b) {
  if (!(a > 0.0)) throw std::invalid_argument("gronwall_sqrt_check: A must be > 0");
  GronwallCheck r;
  for (const auto& [t, f] : f_samples) {
    const double bound = a * std::exp(2.0 * b * std::sqrt(t));
    r.margin = std::min(r.margin, (bound - f) / a);
    if (f > bound * (1.0 + 1e-12)) r.holds = false;
  }
  return r;
}

struct GrowthVerdict {
  double c0_hat = 0.0;
  double norm0 = 0.0;
  bool finite = false;
  double delta = 0.0;
};

/// Smallest C with N(t) <= C e^{C t} at every sample. Per sample the minimum
/// solves C t e^{C t} = N t, i.e. C = W0(N t) / t, and C = N at t = 0.
inline GrowthVerdict apriori_growth_check(const std::vector<std::pair<double, double>>& norm_samples, double delta) {
  if (norm_samples.empty()) throw std::invalid_argument("apriori_growth_check: no samples");
  GrowthVerdict v;
  v.delta = delta;
  v.norm0 = norm_samples.front().second;
  for (const auto& [t, n] : norm_samples) {
    if (t < 0.0 || n < 0.0) throw std::invalid_argument("apriori_growth_check: negative sample");
    const double c = t == 0.0 ? n : boost::math::lambert_w0(n * t) / t;
    v.c0_hat = std::max(v.c0_hat, c);
  }
  v.finite = std::isfinite(v.c0_hat);
  return v;
}

inline constexpr double kErrorFloor = 1e-14;

struct RateFit {
  std::vector<double> times;
  std::vector<double> epsilons;
  std::vector<std::vector<double>> errors;  // [eps][time], g = ||U||^2
  std::vector<double> slope;                // exponent of eps in g; NaN where undefined
  std::vector<double> exponent;             // slope / 2, exponent of eps in ||U||
  std::vector<double> residual;             // rms residual of the per-time fit
  std::vector<std::string> flags;           // per time; empty when clean

  bool defined(std::size_t k) const { return std::isfinite(slope[k]); }
};

/// Per-time least-squares slope of log g against log eps. Times with fewer
/// than three usable samples (g above the floor) are flagged and left NaN.
inline RateFit fit_rate(const std::vector<double>& times, const std::vector<double>& epsilons,
                        const std::vector<std::vector<double>>& errors) {
  if (epsilons.size() < 3) throw std::invalid_argument("need >= 3 viscosities");
  if (errors.size() != epsilons.size()) throw std::invalid_argument("fit_rate: one error row per epsilon");
  for (const auto& row : errors)
    if (row.size() != times.size()) throw std::invalid_argument("fit_rate: error rows must match the time grid");
  for (double e : epsilons)
    if (!(e > 0.0)) throw std::invalid_argument("fit_rate: epsilons must be > 0");
  const auto [emin, emax] = std::minmax_element(epsilons.begin(), epsilons.end());
  RateFit fit{times, epsilons, errors, {}, {}, {}, {}};
  const bool narrow = std::log10(*emax / *emin) < 2.0 - 1e-9;

  std::vector<std::size_t> order(epsilons.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return epsilons[a] < epsilons[b]; });

  for (std::size_t k = 0; k < times.size(); ++k) {
    std::string flag = narrow ? "epsilon span < 2 decades" : "";
    auto add_flag = [&](const std::string& f) { flag += (flag.empty() ? "" : "; ") + f; };
    std::vector<double> x, y;
    double prev = -1.0;
    bool monotone = true;
    for (auto e : order) {
      const double g = errors[e][k];
      if (g < 0.0) throw std::invalid_argument("fit_rate: errors must be >= 0");
      if (g < prev) monotone = false;
      prev = g;
      if (times[k] == 0.0 || g < kErrorFloor) continue;
      x.push_back(std::log(epsilons[e]));
      y.push_back(std::log(g));
    }
    if (!monotone) add_flag("non-monotone in epsilon");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (x.size() < 3) {
      add_flag(times[k] == 0.0 ? "t = 0: slope undefined" : "fewer than 3 samples above floor");
      fit.slope.push_back(nan);
      fit.exponent.push_back(nan);
      fit.residual.push_back(nan);
    } else {
      const auto lf = fit_line(x, y);
      fit.slope.push_back(lf.slope);
      fit.exponent.push_back(0.5 * lf.slope);
      fit.residual.push_back(lf.rms_residual);
    }
    fit.flags.push_back(flag);
  }
  return fit;
}

/// Smallness condition (C0 T eps)^{beta(T)} <= e^{-2} for one viscosity.
inline bool epsilon_admissible(double c0, double horizon, double epsilon, double beta_at_horizon) {
  return std::pow(c0 * horizon * epsilon, beta_at_horizon) <= std::exp(-2.0);
}

}  // namespace viscidlab
