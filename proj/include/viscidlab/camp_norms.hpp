#pragma once

// Discrete Morrey-Campanato estimators on a PeriodicGrid.
//
// Every supremum is taken over a BallFamily: a strided lattice of centers
// crossed with dyadic radii 2^-j. Sups are therefore lower bounds of the
// continuous quantities. Ball averages are plain node averages.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "viscidlab/biot_savart.hpp"
#include "viscidlab/grid.hpp"
#include "viscidlab/interpolate.hpp"
#include "viscidlab/parallel.hpp"

namespace viscidlab {

/// Smallest node count a ball may contain.
inline constexpr std::size_t kMinBallNodes = 32;

/// Radius of the ball with unit area.
inline const double kUnitBallRadius = 1.0 / std::sqrt(std::numbers::pi);

struct Ball {
  std::size_t i = 0;  // center node along x1
  std::size_t j = 0;  // center node along x2
  double radius = 0.0;
};

/// Node offsets of a discrete ball, stored per row as [-half_width, half_width].
struct BallStencil {
  double radius = 0.0;
  std::vector<std::pair<long, long>> rows;  // (row offset, half width)
  std::size_t count = 0;
};

inline BallStencil make_stencil(const PeriodicGrid& g, double radius) {
  BallStencil s;
  s.radius = radius;
  const double h = g.spacing();
  const double rr = radius * radius * (1.0 + 1e-12);
  const long reach = static_cast<long>(std::floor(radius / h));
  for (long di = -reach; di <= reach; ++di) {
    const double rem = rr - static_cast<double>(di * di) * h * h;
    if (rem < 0.0) continue;
    long w = static_cast<long>(std::floor(std::sqrt(rem) / h));
    while (static_cast<double>(di * di + (w + 1) * (w + 1)) * h * h <= rr) ++w;
    while (w >= 0 && static_cast<double>(di * di + w * w) * h * h > rr) --w;
    if (w < 0) continue;
    s.rows.emplace_back(di, w);
    s.count += static_cast<std::size_t>(2 * w + 1);
  }
  // A ball may not wrap onto itself.
  if (2 * reach + 1 > static_cast<long>(g.size())) throw std::invalid_argument("ball larger than the torus");
  return s;
}

namespace detail {

template <typename Visit>
void for_each_in_ball(const ScalarField& f, const BallStencil& s, std::size_t ci, std::size_t cj, Visit&& visit) {
  const auto& g = f.grid();
  const std::size_t n = g.size();
  const auto& vals = f.values();
  for (const auto& [di, w] : s.rows) {
    const std::size_t row = g.wrap(static_cast<long>(ci) + di) * n;
    for (long dj = -w; dj <= w; ++dj) visit(vals[row + g.wrap(static_cast<long>(cj) + dj)]);
  }
}

inline double ball_mean(const ScalarField& f, const BallStencil& s, std::size_t ci, std::size_t cj) {
  double sum = 0.0;
  for_each_in_ball(f, s, ci, cj, [&](double v) { sum += v; });
  return sum / static_cast<double>(s.count);
}

inline double ball_oscillation(const ScalarField& f, const BallStencil& s, std::size_t ci, std::size_t cj,
                               double mean, double q) {
  double acc = 0.0;
  if (q == 2.0) {
    for_each_in_ball(f, s, ci, cj, [&](double v) { acc += (v - mean) * (v - mean); });
    return std::sqrt(acc / static_cast<double>(s.count));
  }
  if (q == 1.0) {
    for_each_in_ball(f, s, ci, cj, [&](double v) { acc += std::abs(v - mean); });
    return acc / static_cast<double>(s.count);
  }
  for_each_in_ball(f, s, ci, cj, [&](double v) { acc += std::pow(std::abs(v - mean), q); });
  return std::pow(acc / static_cast<double>(s.count), 1.0 / q);
}

}  // namespace detail

/// Strided centers crossed with dyadic radii 2^-j, j = jmin..jmax.
class BallFamily {
 public:
  BallFamily(const PeriodicGrid& grid, std::size_t stride, int jmin, int jmax) : grid_(grid), stride_(stride) {
    if (stride == 0 || grid.size() % stride != 0) throw std::invalid_argument("stride must divide n");
    if (jmin < 0 || jmax < jmin) throw std::invalid_argument("need 0 <= jmin <= jmax");
    for (int j = jmin; j <= jmax; ++j) {
      const double r = std::ldexp(1.0, -j);
      auto st = make_stencil(grid, r);
      if (st.count < kMinBallNodes || r < 4.0 * grid.spacing())
        throw std::invalid_argument("ball radius " + std::to_string(r) + " below resolution floor");
      radii_.push_back(r);
      exponents_.push_back(j);
      stencils_.push_back(std::move(st));
    }
    unit_ = make_stencil(grid, kUnitBallRadius);
    for (std::size_t i = 0; i < grid.size(); i += stride)
      for (std::size_t j = 0; j < grid.size(); j += stride) centers_.emplace_back(i, j);
  }

  const PeriodicGrid& grid() const { return grid_; }
  std::size_t stride() const { return stride_; }
  const std::vector<double>& radii() const { return radii_; }
  const std::vector<int>& exponents() const { return exponents_; }
  const std::vector<BallStencil>& stencils() const { return stencils_; }
  const BallStencil& unit_stencil() const { return unit_; }
  const std::vector<std::pair<std::size_t, std::size_t>>& centers() const { return centers_; }

 private:
  PeriodicGrid grid_;
  std::size_t stride_;
  std::vector<double> radii_;
  std::vector<int> exponents_;
  std::vector<BallStencil> stencils_;
  BallStencil unit_;
  std::vector<std::pair<std::size_t, std::size_t>> centers_;
};

/// Largest j such that 2^-j >= 4 h and the ball still has kMinBallNodes nodes.
inline int max_dyadic_exponent(const PeriodicGrid& g) {
  int j = 1;
  while (true) {
    const double r = std::ldexp(1.0, -(j + 1));
    if (r < 4.0 * g.spacing() || make_stencil(g, r).count < kMinBallNodes) break;
    ++j;
  }
  return j;
}

/// Family with defaults: stride n/64 (at least 1), radii 1/2 .. finest admissible.
inline BallFamily make_ball_family(const PeriodicGrid& g, std::size_t stride = 0, int jmax = 0, int jmin = 1) {
  if (stride == 0) stride = std::max<std::size_t>(1, g.size() / 64);
  if (jmax == 0) jmax = max_dyadic_exponent(g);
  return BallFamily(g, stride, jmin, jmax);
}

/// (avg_B |f - avg_B f|^q)^(1/q) over the grid nodes inside B.
inline double oscillation(const ScalarField& f, const Ball& b, double q = 2.0) {
  if (q < 1.0) throw std::invalid_argument("oscillation exponent must be >= 1");
  const auto st = make_stencil(f.grid(), b.radius);
  if (st.count < kMinBallNodes) throw std::invalid_argument("ball below resolution floor");
  const double m = detail::ball_mean(f, st, b.i, b.j);
  return detail::ball_oscillation(f, st, b.i, b.j, m, q);
}

/// Means and q-oscillations for every (radius, center) of a family.
struct BallStatistics {
  std::vector<std::vector<double>> mean;  // [radius][center]
  std::vector<std::vector<double>> osc;   // [radius][center]
};

inline BallStatistics scan_balls(const ScalarField& f, const BallFamily& fam, double q = 2.0) {
  const std::size_t nr = fam.radii().size();
  const std::size_t nc = fam.centers().size();
  BallStatistics s{std::vector<std::vector<double>>(nr, std::vector<double>(nc)),
                   std::vector<std::vector<double>>(nr, std::vector<double>(nc))};
  parallel_for(nc, [&](std::size_t c) {
    const auto [ci, cj] = fam.centers()[c];
    for (std::size_t r = 0; r < nr; ++r) {
      const auto& st = fam.stencils()[r];
      const double m = detail::ball_mean(f, st, ci, cj);
      s.mean[r][c] = m;
      s.osc[r][c] = detail::ball_oscillation(f, st, ci, cj, m, q);
    }
  });
  return s;
}

/// (sup over unit-area balls of int_B |f|^2)^(1/2), with int_B = |B| * node average.
inline double unit_ball_term(const ScalarField& f, const BallFamily& fam) {
  const auto& centers = fam.centers();
  std::vector<double> vals(centers.size());
  parallel_for(centers.size(), [&](std::size_t c) {
    double acc = 0.0;
    detail::for_each_in_ball(f, fam.unit_stencil(), centers[c].first, centers[c].second,
                             [&](double v) { acc += v * v; });
    vals[c] = acc / static_cast<double>(fam.unit_stencil().count);
  });
  return std::sqrt(*std::max_element(vals.begin(), vals.end()));
}

struct LamoEntry {
  double alpha = 0.0;
  double value = 0.0;        // homogeneous + unit_term
  double homogeneous = 0.0;  // sup |ln r|^alpha osc
  double unit_term = 0.0;
  Ball argmax;
};

namespace detail {
inline LamoEntry lamo_from_stats(const BallStatistics& s, const BallFamily& fam, double alpha, double unit) {
  LamoEntry e;
  e.alpha = alpha;
  e.unit_term = unit;
  double best = -1.0;
  for (std::size_t r = 0; r < fam.radii().size(); ++r) {
    const double w = std::pow(std::abs(std::log(fam.radii()[r])), alpha);
    for (std::size_t c = 0; c < fam.centers().size(); ++c) {
      const double v = w * s.osc[r][c];
      if (v > best) {
        best = v;
        e.argmax = Ball{fam.centers()[c].first, fam.centers()[c].second, fam.radii()[r]};
      }
    }
  }
  e.homogeneous = std::max(best, 0.0);
  e.value = e.homogeneous + unit;
  return e;
}
}  // namespace detail

/// Discrete L^alpha mo norm: sup |ln r|^alpha osc_q(B) + unit-ball L2 term.
inline LamoEntry lamo_norm(const ScalarField& f, double alpha, const BallFamily& fam, double q = 2.0) {
  if (alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
  return detail::lamo_from_stats(scan_balls(f, fam, q), fam, alpha, unit_ball_term(f, fam));
}

/// BMO seminorm over the family: sup of osc_q with no radius weight.
inline LamoEntry bmo_norm(const ScalarField& f, const BallFamily& fam, double q = 2.0) {
  auto e = detail::lamo_from_stats(scan_balls(f, fam, q), fam, 0.0, 0.0);
  return e;
}

struct LbmoEntry {
  double value = 0.0;  // bmo + pair_sup
  double bmo = 0.0;
  double pair_sup = 0.0;
  Ball outer;
  Ball inner;
};

namespace detail {
inline LbmoEntry lbmo_from_stats(const BallStatistics& s, const BallFamily& fam) {
  LbmoEntry e;
  e.bmo = lamo_from_stats(s, fam, 0.0, 0.0).homogeneous;
  const auto& g = fam.grid();
  const long n_lat = static_cast<long>(g.size() / fam.stride());
  const double lattice = g.spacing() * static_cast<double>(fam.stride());
  const auto& radii = fam.radii();
  double best = 0.0;
  for (std::size_t a = 0; a < radii.size(); ++a) {
    const double r1 = radii[a];
    if (r1 > 1.0) continue;
    for (std::size_t b = 0; b < radii.size(); ++b) {
      const double r2 = radii[b];
      if (2.0 * r2 > r1 * (1.0 + 1e-12)) continue;
      const double reach = r1 - 2.0 * r2;
      const double denom = 1.0 + std::log((1.0 - std::log(r2)) / (1.0 - std::log(r1)));
      // Lattice offsets whose center distance keeps 2 B2 inside B1.
      std::vector<std::pair<long, long>> offsets;
      const long m = static_cast<long>(std::floor(reach / lattice + 1e-12));
      for (long di = -m; di <= m; ++di)
        for (long dj = -m; dj <= m; ++dj)
          if (std::hypot(di * lattice, dj * lattice) <= reach * (1.0 + 1e-12)) offsets.emplace_back(di, dj);
      for (std::size_t c = 0; c < fam.centers().size(); ++c) {
        const long li = static_cast<long>(c) / n_lat, lj = static_cast<long>(c) % n_lat;
        for (const auto& [di, dj] : offsets) {
          const long c2i = ((li + di) % n_lat + n_lat) % n_lat;
          const long c2j = ((lj + dj) % n_lat + n_lat) % n_lat;
          const std::size_t c2 = static_cast<std::size_t>(c2i * n_lat + c2j);
          const double v = std::abs(s.mean[b][c2] - s.mean[a][c]) / denom;
          if (v > best) {
            best = v;
            e.outer = Ball{fam.centers()[c].first, fam.centers()[c].second, r1};
            e.inner = Ball{fam.centers()[c2].first, fam.centers()[c2].second, r2};
          }
        }
      }
    }
  }
  e.pair_sup = best;
  e.value = e.bmo + best;
  return e;
}
}  // namespace detail

/// LBMO norm over nested pairs 2 B2 inside B1 drawn from one family.
inline LbmoEntry lbmo_norm(const ScalarField& f, const BallFamily& fam, double q = 2.0) {
  return detail::lbmo_from_stats(scan_balls(f, fam, q), fam);
}

struct LblEntry {
  double value = 0.0;
  double quotient_sup = 0.0;
  double sup = 0.0;
  double argmax_separation = 0.0;
};

/// Empirical L^beta L norm of a vector field: sup over node pairs at dyadic
/// separations (axes and diagonals, |x - y| < 1/2) of
/// |u(x) - u(y)| / (|x - y| |ln|x - y||^beta), plus sup |u|.
inline LblEntry lbl_modulus(const VectorField& u, double beta, std::size_t sample_stride = 1) {
  if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("beta must lie in [0, 1]");
  const auto& g = u.grid();
  const std::size_t n = g.size();
  const double h = g.spacing();
  struct Offset {
    long di, dj;
    double d;
  };
  std::vector<Offset> offsets;
  for (long m = 1; static_cast<double>(m) * h < 0.5 && m < static_cast<long>(n / 2); m *= 2) {
    const double d = static_cast<double>(m) * h;
    offsets.push_back({m, 0, d});
    offsets.push_back({0, m, d});
    if (d * std::numbers::sqrt2 < 0.5) {
      offsets.push_back({m, m, d * std::numbers::sqrt2});
      offsets.push_back({m, -m, d * std::numbers::sqrt2});
    }
  }
  LblEntry e;
  e.sup = u.max_magnitude();
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < n; i += sample_stride) rows.push_back(i);
  std::vector<std::pair<double, double>> row_best(rows.size(), {0.0, 0.0});
  parallel_for(rows.size(), [&](std::size_t r) {
    const std::size_t i = rows[r];
    for (std::size_t j = 0; j < n; j += sample_stride) {
      for (const auto& o : offsets) {
        const std::size_t i2 = g.wrap(static_cast<long>(i) + o.di), j2 = g.wrap(static_cast<long>(j) + o.dj);
        const double du = std::hypot(u.u1(i, j) - u.u1(i2, j2), u.u2(i, j) - u.u2(i2, j2));
        const double q = du / (o.d * std::pow(std::abs(std::log(o.d)), beta));
        if (q > row_best[r].first) row_best[r] = {q, o.d};
      }
    }
  });
  for (const auto& [q, d] : row_best) {
    if (q > e.quotient_sup) {
      e.quotient_sup = q;
      e.argmax_separation = d;
    }
  }
  e.value = e.quotient_sup + e.sup;
  return e;
}

/// Full report for one field on one family.
struct NormReport {
  std::map<double, double> lp;
  double sup = 0.0;
  double bmo = 0.0;
  Ball bmo_argmax;
  std::map<double, LamoEntry> lamo;
  LbmoEntry lbmo;
  double q_oscillation = 2.0;
};

inline NormReport norm_report(const ScalarField& f, const BallFamily& fam, const std::vector<double>& ps,
                              const std::vector<double>& alphas, double q = 2.0) {
  NormReport rep;
  rep.q_oscillation = q;
  for (double p : ps) rep.lp[p] = f.lp_norm(p);
  rep.sup = f.max_abs();
  const auto stats = scan_balls(f, fam, q);
  const double unit = unit_ball_term(f, fam);
  const auto b = detail::lamo_from_stats(stats, fam, 0.0, 0.0);
  rep.bmo = b.homogeneous;
  rep.bmo_argmax = b.argmax;
  for (double a : alphas) rep.lamo[a] = detail::lamo_from_stats(stats, fam, a, unit);
  rep.lbmo = detail::lbmo_from_stats(stats, fam);
  return rep;
}

inline nlohmann::json ball_json(const Ball& b) { return {{"i", b.i}, {"j", b.j}, {"radius", b.radius}}; }

inline nlohmann::json to_json(const NormReport& r) {
  nlohmann::json j;
  j["q_oscillation"] = r.q_oscillation;
  j["sup"] = r.sup;
  j["bmo"] = r.bmo;
  j["bmo_argmax"] = ball_json(r.bmo_argmax);
  nlohmann::json lp = nlohmann::json::array();
  for (const auto& [p, v] : r.lp) lp.push_back({{"p", p}, {"value", v}});
  j["lp"] = lp;
  nlohmann::json lamo = nlohmann::json::array();
  for (const auto& [a, e] : r.lamo)
    lamo.push_back({{"alpha", a},
                    {"value", e.value},
                    {"homogeneous", e.homogeneous},
                    {"unit_term", e.unit_term},
                    {"argmax", ball_json(e.argmax)}});
  j["lamo"] = lamo;
  j["lbmo"] = {{"value", r.lbmo.value},
               {"bmo", r.lbmo.bmo},
               {"pair_sup", r.lbmo.pair_sup},
               {"outer", ball_json(r.lbmo.outer)},
               {"inner", ball_json(r.lbmo.inner)}};
  return j;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double rms_residual = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = intercept + slope x.
inline LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line needs >= 2 matched points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sx += x[k];
    sy += y[k];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  LinearFit fit;
  fit.points = x.size();
  fit.slope = sxx > 0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
  fit.intercept = my - fit.slope * mx;
  double ss = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double r = y[k] - (fit.intercept + fit.slope * x[k]);
    ss += r * r;
  }
  fit.rms_residual = std::sqrt(ss / n);
  fit.r_squared = syy > 0 ? 1.0 - ss / syy : 1.0;
  return fit;
}

struct JohnNirenbergProfile {
  std::vector<double> lambdas;
  std::vector<double> fractions;
  double exponent = 1.0;  // 1 / (1 - alpha)
  LinearFit fit;          // log(fraction) against lambda^exponent
  double c1 = 0.0;        // exp(intercept)
  double c2 = 0.0;        // -slope * norm, when a norm was supplied
  std::size_t fit_points = 0;
};

/// Level-set tail |{x in Q : |f - avg_Q f| > lambda}| / |Q| for each lambda,
/// with a log-linear fit against lambda^(1/(1-alpha)) over fractions in
/// [min_fraction, max_fraction]. Zero fractions never enter the fit.
inline JohnNirenbergProfile john_nirenberg_profile(const ScalarField& f, const Ball& q_ball, double alpha,
                                                   const std::vector<double>& lambdas,
                                                   std::optional<double> norm = std::nullopt,
                                                   double min_fraction = 1e-4, double max_fraction = 0.5) {
  if (alpha < 0.0 || alpha >= 1.0) throw std::invalid_argument("alpha must lie in [0, 1)");
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    if (!(lambdas[k] > 0.0) || (k > 0 && !(lambdas[k] > lambdas[k - 1])))
      throw std::invalid_argument("lambda grid must be positive and increasing");
  }
  const auto st = make_stencil(f.grid(), q_ball.radius);
  const double m = detail::ball_mean(f, st, q_ball.i, q_ball.j);
  std::vector<double> dev;
  dev.reserve(st.count);
  detail::for_each_in_ball(f, st, q_ball.i, q_ball.j, [&](double v) { dev.push_back(std::abs(v - m)); });
  std::sort(dev.begin(), dev.end());
  JohnNirenbergProfile p;
  p.lambdas = lambdas;
  p.exponent = 1.0 / (1.0 - alpha);
  std::vector<double> xs, ys;
  for (double lam : lambdas) {
    const auto above = dev.end() - std::upper_bound(dev.begin(), dev.end(), lam);
    const double frac = static_cast<double>(above) / static_cast<double>(dev.size());
    p.fractions.push_back(frac);
    if (frac > 0.0 && frac >= min_fraction && frac <= max_fraction) {
      xs.push_back(std::pow(lam, p.exponent));
      ys.push_back(std::log(frac));
    }
  }
  p.fit_points = xs.size();
  if (xs.size() >= 2) {
    p.fit = fit_line(xs, ys);
    p.c1 = std::exp(p.fit.intercept);
    if (norm) p.c2 = -p.fit.slope * *norm;
  }
  return p;
}

struct InterpolationRow {
  double r;
  double lr_norm;
  double ratio;
};

struct InterpolationCheck {
  std::vector<InterpolationRow> rows;
  double max_ratio = 0.0;
  double denominator_norm = 0.0;  // ||f||_{L2} + (BMO or L^alpha mo)
};

/// Ratios ||f||_{L^r} / (r^(1-alpha) (||f||_{L2} + N(f))), N = BMO when alpha is
/// absent (exponent 1 on r), N = L^alpha mo otherwise.
inline InterpolationCheck interpolation_check(const ScalarField& f, const std::vector<double>& r_grid,
                                              const BallFamily& fam, std::optional<double> alpha = std::nullopt) {
  InterpolationCheck out;
  const double n2 = f.l2_norm();
  const double nm = alpha ? lamo_norm(f, *alpha, fam).value : bmo_norm(f, fam).value;
  out.denominator_norm = n2 + nm;
  const double power = alpha ? 1.0 - *alpha : 1.0;
  for (double r : r_grid) {
    if (r < 2.0) throw std::invalid_argument("interpolation exponents must be >= 2");
    const double lr = f.lp_norm(r);
    const double denom = std::pow(r, power) * out.denominator_norm;
    const double ratio = denom > 0.0 ? lr / denom : 0.0;
    out.rows.push_back({r, lr, ratio});
    out.max_ratio = std::max(out.max_ratio, ratio);
  }
  return out;
}

// Lattice maps: measure-preserving maps of the torus that send grid nodes to
// grid nodes, so composition is an exact permutation of samples.
struct Translation {
  long di = 0;
  long dj = 0;
};
struct QuarterRotation {
  int turns = 1;  // x -> R^turns x, R = rotation by pi/2 about node (0, 0)
};
struct IntegerShear {
  long a = 1, b = 1, c = 0, d = 1;  // x -> [[a, b], [c, d]] x
};
using LatticeMap = std::variant<Translation, QuarterRotation, IntegerShear>;

inline std::pair<long, long> map_node(const LatticeMap& m, long i, long j) {
  return std::visit(
      [&](const auto& mp) -> std::pair<long, long> {
        using T = std::decay_t<decltype(mp)>;
        if constexpr (std::is_same_v<T, Translation>) {
          return {i + mp.di, j + mp.dj};
        } else if constexpr (std::is_same_v<T, QuarterRotation>) {
          long a = i, b = j;
          const int t = ((mp.turns % 4) + 4) % 4;
          for (int k = 0; k < t; ++k) {
            const long na = -b, nb = a;
            a = na;
            b = nb;
          }
          return {a, b};
        } else {
          return {mp.a * i + mp.b * j, mp.c * i + mp.d * j};
        }
      },
      m);
}

/// Bi-Lipschitz constant K of a lattice map (exact, from singular values).
inline double bilipschitz_constant(const LatticeMap& m) {
  if (const auto* s = std::get_if<IntegerShear>(&m)) {
    const double a = static_cast<double>(s->a), b = static_cast<double>(s->b);
    const double c = static_cast<double>(s->c), d = static_cast<double>(s->d);
    const double t = a * a + b * b + c * c + d * d;
    const double det = a * d - b * c;
    const double disc = std::sqrt(std::max(0.0, t * t - 4.0 * det * det));
    const double smax = std::sqrt(0.5 * (t + disc));
    const double smin = std::sqrt(std::max(0.0, 0.5 * (t - disc)));
    return std::max(smax, 1.0 / smin);
  }
  return 1.0;
}

/// f o phi sampled on the grid.
inline ScalarField compose(const ScalarField& f, const LatticeMap& m) {
  if (const auto* s = std::get_if<IntegerShear>(&m)) {
    if (std::abs(s->a * s->d - s->b * s->c) != 1) throw std::invalid_argument("map is not measure-preserving");
  }
  const auto& g = f.grid();
  const std::size_t n = g.size();
  ScalarField out(g);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const auto [a, b] = map_node(m, static_cast<long>(i), static_cast<long>(j));
      out(i, j) = f.at_wrapped(a, b);
    }
  return out;
}

enum class NormKind { bmo, lamo, lbmo, lamo_lp };

inline std::string to_string(NormKind k) {
  switch (k) {
    case NormKind::bmo: return "bmo";
    case NormKind::lamo: return "lamo";
    case NormKind::lbmo: return "lbmo";
    case NormKind::lamo_lp: return "lamo_lp";
  }
  return "?";
}

inline NormKind norm_kind_from_string(const std::string& s) {
  if (s == "bmo") return NormKind::bmo;
  if (s == "lamo") return NormKind::lamo;
  if (s == "lbmo") return NormKind::lbmo;
  if (s == "lamo_lp") return NormKind::lamo_lp;
  throw std::invalid_argument("unknown norm kind: " + s);
}

inline double evaluate_norm(const ScalarField& f, NormKind kind, double alpha, const BallFamily& fam,
                            double p = 4.0 / 3.0) {
  switch (kind) {
    case NormKind::bmo: return bmo_norm(f, fam).value;
    case NormKind::lamo: return lamo_norm(f, alpha, fam).value;
    case NormKind::lbmo: return lbmo_norm(f, fam).value;
    case NormKind::lamo_lp: return lamo_norm(f, alpha, fam).value + f.lp_norm(p);
  }
  return 0.0;
}

struct CompositionRatio {
  double ratio = 0.0;
  double bilipschitz = 1.0;
  double norm_before = 0.0;
  double norm_after = 0.0;
};

/// norm(f o phi) / norm(f) on one family, given the composed field and the
/// map's bi-Lipschitz constant.
inline CompositionRatio composition_ratio(const ScalarField& f, const ScalarField& composed, double bilipschitz,
                                          NormKind kind, double alpha, const BallFamily& fam) {
  CompositionRatio r;
  r.bilipschitz = bilipschitz;
  r.norm_before = evaluate_norm(f, kind, alpha, fam);
  r.norm_after = evaluate_norm(composed, kind, alpha, fam);
  r.ratio = r.norm_before > 0.0 ? r.norm_after / r.norm_before : 1.0;
  return r;
}

inline CompositionRatio composition_ratio(const ScalarField& f, const LatticeMap& m, NormKind kind, double alpha,
                                          const BallFamily& fam) {
  return composition_ratio(f, compose(f, m), bilipschitz_constant(m), kind, alpha, fam);
}

struct DyadicDecay {
  double value = 0.0;
  int argmax_block = -1;
  std::vector<std::pair<int, double>> weighted;  // (block, (1+n)^alpha sup)
};

/// sup_n (1 + n)^alpha ||Delta_n f||_inf over blocks n >= 0; the mean block
/// is excluded.
inline DyadicDecay dyadic_decay_check(const ScalarField& f, double alpha) {
  DyadicDecay out;
  for (const auto& b : dyadic_decompose(f)) {
    if (b.index < 0) continue;
    const double w = std::pow(1.0 + b.index, alpha) * b.sup;
    out.weighted.emplace_back(b.index, w);
    if (w > out.value) {
      out.value = w;
      out.argmax_block = b.index;
    }
  }
  return out;
}

}  // namespace viscidlab
