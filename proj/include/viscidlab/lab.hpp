#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "viscidlab/analysis.hpp"
#include "viscidlab/biot_savart.hpp"
#include "viscidlab/camp_norms.hpp"
#include "viscidlab/flow_map.hpp"
#include "viscidlab/grid.hpp"
#include "viscidlab/initial_data.hpp"
#include "viscidlab/io.hpp"
#include "viscidlab/parallel.hpp"
#include "viscidlab/timestep.hpp"

#ifndef VISCIDLAB_VERSION
#define VISCIDLAB_VERSION "0.0.0"
#endif

namespace viscidlab::lab {

namespace fs = std::filesystem;
using nlohmann::json;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct FlowSettings {
  std::string velocity = "euler";  // zero | translation | shear | euler
  double amplitude = 1.0;
  std::size_t seeds_per_axis = 16;
  std::size_t pair_bases = 4;  // per axis
  int pair_jmin = 2;
  int pair_jmax = 6;
  std::size_t triangles = 16;
  double dt = 0.0;  // 0 picks a default from the CFL limit
  double snapshot_dt = 0.05;
  double alpha = 0.0;
  double lipschitz_tolerance = 0.05;
};

struct JohnNirenbergSettings {
  bool enabled = false;
  std::vector<double> alphas{0.0, 0.5};
  double radius = 0.5;
  std::size_t lambdas = 40;
  std::size_t n = 0;  // grid size; 0 takes the first entry of grid_sizes
  double min_r_squared = 0.9;
};

/// Resolved run configuration; every field has a default.
struct ExperimentConfig {
  std::string command = "simulate";
  std::size_t n = 64;
  double length = 2.0 * std::numbers::pi;
  std::string data = "taylor_green";
  json data_params = json::object();
  std::string model = "ns";  // euler | ns | fracns
  double epsilon = 0.01;
  std::vector<double> epsilons{1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
  double horizon = 1.0;
  double dt = 0.005;
  double sigma = 2.0;
  bool dealias = true;
  std::size_t samples = 10;
  std::vector<std::size_t> n_subintervals{8, 16, 32, 64};
  double inner_dt = 0.01;
  double min_order = 0.9;
  double tracking_p = 4.0 / 3.0;
  double tracking_alpha = 2.0;
  double delta = 0.2;
  std::string regularity = "auto";  // auto | smooth | rough
  std::vector<double> alphas{0.0, 0.5, 1.0, 2.0};
  std::vector<double> ps{4.0 / 3.0, 2.0};
  double q = 2.0;
  std::size_t stride = 0;
  int jmax = 0;
  std::vector<std::size_t> grid_sizes;
  std::vector<std::string> checks;
  JohnNirenbergSettings john_nirenberg;
  std::vector<std::string> corpus;
  json maps = json::array();
  std::vector<std::string> norm_kinds{"bmo", "lamo", "lbmo"};
  double compose_alpha = 0.5;
  FlowSettings flow;
  bool write_fields = true;
  std::string output_dir = "out";
  std::size_t workers = 0;
  std::uint64_t seed = 0;
  bool plots = false;

  static ExperimentConfig from_json(const json& j);
  json to_json() const;
  void validate() const;
};

namespace detail {

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
  }
}

inline void check_keys(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw ConfigError("unknown config key '" + it.key() + "'" + where);
}

}  // namespace detail

inline ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  detail::check_keys(j,
                     {"command", "n", "length", "initial_data", "model", "epsilon", "epsilons", "horizon", "dt",
                      "sigma", "dealias", "samples", "n_subintervals", "inner_dt", "min_order", "tracking_p",
                      "tracking_alpha", "delta", "regularity", "alphas", "ps", "q", "stride", "jmax", "grid_sizes",
                      "checks", "john_nirenberg", "corpus", "maps", "norm_kinds", "compose_alpha", "flow",
                      "write_fields", "output_dir", "workers", "seed", "plots"},
                     "");
  ExperimentConfig c;
  using detail::take;
  take(j, "command", c.command);
  take(j, "n", c.n);
  take(j, "length", c.length);
  if (j.contains("initial_data")) {
    const auto& d = j.at("initial_data");
    if (d.is_string()) {
      c.data = d.get<std::string>();
    } else if (d.is_object() && d.contains("name")) {
      c.data = d.at("name").get<std::string>();
      c.data_params = d;
      c.data_params.erase("name");
    } else {
      throw ConfigError("initial_data must be a name or an object with a 'name'");
    }
  }
  take(j, "model", c.model);
  take(j, "epsilon", c.epsilon);
  take(j, "epsilons", c.epsilons);
  take(j, "horizon", c.horizon);
  take(j, "dt", c.dt);
  take(j, "sigma", c.sigma);
  take(j, "dealias", c.dealias);
  take(j, "samples", c.samples);
  take(j, "n_subintervals", c.n_subintervals);
  take(j, "inner_dt", c.inner_dt);
  take(j, "min_order", c.min_order);
  take(j, "tracking_p", c.tracking_p);
  take(j, "tracking_alpha", c.tracking_alpha);
  take(j, "delta", c.delta);
  take(j, "regularity", c.regularity);
  take(j, "alphas", c.alphas);
  take(j, "ps", c.ps);
  take(j, "q", c.q);
  take(j, "stride", c.stride);
  take(j, "jmax", c.jmax);
  take(j, "grid_sizes", c.grid_sizes);
  take(j, "checks", c.checks);
  if (j.contains("john_nirenberg") && !j.at("john_nirenberg").is_null()) {
    const auto& s = j.at("john_nirenberg");
    detail::check_keys(s, {"alphas", "radius", "lambdas", "n", "min_r_squared"}, " in john_nirenberg");
    c.john_nirenberg.enabled = true;
    take(s, "alphas", c.john_nirenberg.alphas);
    take(s, "radius", c.john_nirenberg.radius);
    take(s, "lambdas", c.john_nirenberg.lambdas);
    take(s, "n", c.john_nirenberg.n);
    take(s, "min_r_squared", c.john_nirenberg.min_r_squared);
  }
  take(j, "corpus", c.corpus);
  if (j.contains("maps")) c.maps = j.at("maps");
  take(j, "norm_kinds", c.norm_kinds);
  take(j, "compose_alpha", c.compose_alpha);
  if (j.contains("flow")) {
    const auto& s = j.at("flow");
    detail::check_keys(s,
                       {"velocity", "amplitude", "seeds_per_axis", "pair_bases", "pair_jmin", "pair_jmax",
                        "triangles", "dt", "snapshot_dt", "alpha", "lipschitz_tolerance"},
                       " in flow");
    auto& f = c.flow;
    take(s, "velocity", f.velocity);
    take(s, "amplitude", f.amplitude);
    take(s, "seeds_per_axis", f.seeds_per_axis);
    take(s, "pair_bases", f.pair_bases);
    take(s, "pair_jmin", f.pair_jmin);
    take(s, "pair_jmax", f.pair_jmax);
    take(s, "triangles", f.triangles);
    take(s, "dt", f.dt);
    take(s, "snapshot_dt", f.snapshot_dt);
    take(s, "alpha", f.alpha);
    take(s, "lipschitz_tolerance", f.lipschitz_tolerance);
  }
  take(j, "write_fields", c.write_fields);
  take(j, "output_dir", c.output_dir);
  take(j, "workers", c.workers);
  take(j, "seed", c.seed);
  take(j, "plots", c.plots);
  return c;
}

inline json ExperimentConfig::to_json() const {
  json data_obj = data_params;
  data_obj["name"] = data;
  return json{
      {"command", command},
      {"n", n},
      {"length", length},
      {"initial_data", data_obj},
      {"model", model},
      {"epsilon", epsilon},
      {"epsilons", epsilons},
      {"horizon", horizon},
      {"dt", dt},
      {"sigma", sigma},
      {"dealias", dealias},
      {"samples", samples},
      {"n_subintervals", n_subintervals},
      {"inner_dt", inner_dt},
      {"min_order", min_order},
      {"tracking_p", tracking_p},
      {"tracking_alpha", tracking_alpha},
      {"delta", delta},
      {"regularity", regularity},
      {"alphas", alphas},
      {"ps", ps},
      {"q", q},
      {"stride", stride},
      {"jmax", jmax},
      {"grid_sizes", grid_sizes},
      {"checks", checks},
      {"john_nirenberg",
       john_nirenberg.enabled ? json{{"alphas", john_nirenberg.alphas},
                                     {"radius", john_nirenberg.radius},
                                     {"lambdas", john_nirenberg.lambdas},
                                     {"n", john_nirenberg.n},
                                     {"min_r_squared", john_nirenberg.min_r_squared}}
                              : json(nullptr)},
      {"corpus", corpus},
      {"maps", maps},
      {"norm_kinds", norm_kinds},
      {"compose_alpha", compose_alpha},
      {"flow",
       {{"velocity", flow.velocity},
        {"amplitude", flow.amplitude},
        {"seeds_per_axis", flow.seeds_per_axis},
        {"pair_bases", flow.pair_bases},
        {"pair_jmin", flow.pair_jmin},
        {"pair_jmax", flow.pair_jmax},
        {"triangles", flow.triangles},
        {"dt", flow.dt},
        {"snapshot_dt", flow.snapshot_dt},
        {"alpha", flow.alpha},
        {"lipschitz_tolerance", flow.lipschitz_tolerance}}},
      {"write_fields", write_fields},
      {"output_dir", output_dir},
      {"workers", workers},
      {"seed", seed},
      {"plots", plots},
  };
}

inline void ExperimentConfig::validate() const {
  static const std::set<std::string> commands{"simulate", "invlimit", "trotter", "norms", "compose", "flow"};
  if (!commands.count(command)) throw ConfigError("unknown command '" + command + "'");
  static_cast<void>(PeriodicGrid(n, length));  // throws on a bad grid
  for (auto m : grid_sizes) static_cast<void>(PeriodicGrid(m, length));
  if (!(horizon > 0.0)) throw ConfigError("horizon must be > 0");
  if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
  if (epsilon < 0.0) throw ConfigError("epsilon must be >= 0");
  if (model != "euler" && model != "ns" && model != "fracns") throw ConfigError("model must be euler, ns or fracns");
  if (!(sigma > 0.0 && sigma <= 2.0)) throw ConfigError("sigma must lie in (0, 2]");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (samples == 0) throw ConfigError("samples must be >= 1");
  if (regularity != "auto" && regularity != "smooth" && regularity != "rough")
    throw ConfigError("regularity must be auto, smooth or rough");
  for (auto m : n_subintervals)
    if (m == 0 || m % 2 != 0) throw ConfigError("n_subintervals must be positive even integers (got " + std::to_string(m) + ")");
}

struct Verdict {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct FileRecord {
  std::string name;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunResult {
  std::string command;
  fs::path directory;
  std::vector<Verdict> verdicts;
  std::vector<FileRecord> files;
  json summary = json::object();

  bool passed() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed; });
  }
  const Verdict* find(const std::string& name) const {
    for (const auto& v : verdicts)
      if (v.name == name) return &v;
    return nullptr;
  }
};

/// Collects outputs, timings and verdicts of one run and writes the manifest.
class RunContext {
 public:
  explicit RunContext(const ExperimentConfig& cfg) : cfg_(cfg), start_(clock::now()) {
    result_.command = cfg.command;
    result_.directory = cfg.output_dir;
    fs::create_directories(result_.directory);
  }

  const ExperimentConfig& config() const { return cfg_; }
  RunResult& result() { return result_; }

  fs::path path(const std::string& name) const { return result_.directory / name; }

  void csv(const std::string& name, const CsvTable& t) {
    write_csv(path(name), t);
    record(name);
  }
  void field(const std::string& name, const ScalarField& f, json meta = {}) {
    if (!cfg_.write_fields) return;
    write_field(path(name), f, std::move(meta));
    record(name);
  }
  void text(const std::string& name, const std::string& body) {
    write_text(path(name), body);
    record(name);
  }
  void svg(const std::string& name, const std::string& title, const std::string& xlabel, const std::vector<double>& x,
           const std::vector<Series>& series, bool log_y = false) {
    if (!cfg_.plots) return;
    text(name, svg_line_chart(title, xlabel, x, series, log_y));
  }

  void verdict(std::string name, bool passed, std::string detail) {
    result_.verdicts.push_back({std::move(name), passed, std::move(detail)});
  }

  /// Starts timing a stage; the previous stage (if any) is closed.
  void stage(const std::string& name) {
    close_stage();
    stage_name_ = name;
    stage_start_ = clock::now();
  }

  RunResult finish() {
    close_stage();
    json verdicts = json::array();
    for (const auto& v : result_.verdicts)
      verdicts.push_back({{"name", v.name}, {"passed", v.passed}, {"detail", v.detail}});
    json files = json::array();
    for (const auto& f : result_.files) files.push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    timings_["total"] = seconds_since(start_);
    json manifest{{"artifact", "viscidlab"},
                  {"version", VISCIDLAB_VERSION},
                  {"command", cfg_.command},
                  {"config", cfg_.to_json()},
                  {"timings_seconds", timings_},
                  {"files", files},
                  {"verdicts", verdicts},
                  {"summary", result_.summary},
                  {"passed", result_.passed()}};
    write_text(path("manifest.json"), manifest.dump(2) + "\n");
    return result_;
  }

 private:
  using clock = std::chrono::steady_clock;
  static double seconds_since(clock::time_point t) { return std::chrono::duration<double>(clock::now() - t).count(); }

  void record(const std::string& name) {
    const auto p = path(name);
    for (auto& f : result_.files)
      if (f.name == name) {
        f = {name, sha256_file(p), fs::file_size(p)};
        return;
      }
    result_.files.push_back({name, sha256_file(p), fs::file_size(p)});
  }

  void close_stage() {
    if (!stage_name_.empty()) timings_[stage_name_] = seconds_since(stage_start_);
    stage_name_.clear();
  }

  ExperimentConfig cfg_;
  RunResult result_;
  json timings_ = json::object();
  clock::time_point start_;
  clock::time_point stage_start_;
  std::string stage_name_;
};

inline std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

inline ScalarField initial_field(const ExperimentConfig& cfg, std::size_t n = 0) {
  return make_initial_data(PeriodicGrid(n ? n : cfg.n, cfg.length), cfg.data, cfg.data_params, cfg.seed);
}

/// ||u||_{L2}^2 of the Biot-Savart velocity.
inline double kinetic_energy(const ScalarField& w) {
  const auto u = velocity_from_vorticity(w);
  const double a = u.u1.l2_norm(), b = u.u2.l2_norm();
  return a * a + b * b;
}

/// ||Lambda^{sigma/2} u||_{L2}^2; for sigma = 2 this is ||grad u||^2.
inline double dissipation_rate(const ScalarField& w, double sigma) {
  const auto& g = w.grid();
  const auto u = velocity_spectrum(to_spectral(w));
  double total = 0.0;
  for (const auto& U : u) {
    const auto v = from_spectral(U.apply([&](long k1, long k2) {
      return Complex(std::pow(wavenumber_squared(g, k1, k2), 0.25 * sigma), 0.0);
    }));
    const double x = v.l2_norm();
    total += x * x;
  }
  return total;
}

inline bool is_smooth_data(const ExperimentConfig& cfg) {
  if (cfg.regularity == "smooth") return true;
  if (cfg.regularity == "rough") return false;
  return cfg.data == "taylor_green" || cfg.data == "shear" || cfg.data == "random_seeded";
}

// ---------------------------------------------------------------- simulate

inline RunResult cmd_simulate(const ExperimentConfig& cfg) {
  RunContext ctx(cfg);
  const auto w0 = initial_field(cfg);
  const auto& g = w0.grid();
  const bool euler = cfg.model == "euler" || (cfg.model != "fracns" && cfg.epsilon == 0.0);
  const double eps = cfg.model == "euler" ? 0.0 : cfg.epsilon;
  const double sigma = cfg.model == "fracns" ? cfg.sigma : 2.0;
  const auto steps = static_cast<std::size_t>(std::ceil(cfg.horizon / cfg.dt - 1e-9));
  const double dt = cfg.horizon / static_cast<double>(steps);
  const std::size_t every = std::max<std::size_t>(1, steps / cfg.samples);

  CsvTable traj({"t", "mean", "l2", "linf", "energy", "enstrophy", "max_speed", "dissipated", "energy_residual"});
  json trajectory{{"model", cfg.model}, {"epsilon", eps}, {"sigma", sigma}, {"dt", dt}, {"snapshots", json::array()}};
  const double e0 = kinetic_energy(w0);
  double dissipated = 0.0;
  double rate_prev = eps > 0.0 ? dissipation_rate(w0, sigma) : 0.0;
  auto record = [&](std::size_t step, const ScalarField& w) {
    const double t = dt * static_cast<double>(step);
    const double e = kinetic_energy(w);
    const double l2 = w.l2_norm();
    traj.add({t, w.mean(), l2, w.max_abs(), e, l2 * l2, max_velocity(w), dissipated,
              e0 > 0.0 ? (e + 2.0 * eps * dissipated - e0) / e0 : 0.0});
    char name[32];
    std::snprintf(name, sizeof name, "snap_%05zu.fld", step);
    ctx.field(name, w, {{"t", t}, {"data", cfg.data}});
    if (cfg.write_fields) trajectory["snapshots"].push_back({{"t", t}, {"file", name}});
  };

  ctx.stage("integrate");
  ScalarField w = w0;
  record(0, w);
  for (std::size_t s = 1; s <= steps; ++s) {
    w = euler ? euler_step(w, dt, 1.0, cfg.dealias) : ns_step(w, eps, dt, sigma, cfg.dealias);
    if (eps > 0.0) {
      const double rate = dissipation_rate(w, sigma);
      dissipated += 0.5 * dt * (rate_prev + rate);
      rate_prev = rate;
    }
    if (s % every == 0 || s == steps) record(s, w);
  }
  ctx.stage("write");
  ctx.csv("trajectory.csv", traj);
  ctx.text("trajectory.json", trajectory.dump(2) + "\n");
  ctx.field("final.fld", w, {{"t", cfg.horizon}, {"data", cfg.data}});

  auto& sum = ctx.result().summary;
  if (cfg.data == "taylor_green" && sigma == 2.0) {
    const double amp = cfg.data_params.value("amplitude", 1.0);
    const double err = relative_l2_error(w, taylor_green_exact(g, eps, cfg.horizon, amp));
    sum["exact_relative_l2_error"] = err;
    ctx.verdict("exact_solution", err < 1e-8, "relative L2 error vs exact solution = " + fmt(err));
  }
  if (cfg.data == "shear" && eps == 0.0) {
    const double d = (w - w0).max_abs();
    sum["stationary_max_deviation"] = d;
    ctx.verdict("stationary_shear", d <= 1e-10, "max |w(T) - w0| = " + fmt(d));
  }
  if (euler) {
    const double dm = std::abs(w.mean() - w0.mean());
    const double dl2 = std::abs(w.l2_norm() - w0.l2_norm()) / std::max(w0.l2_norm(), 1e-300);
    sum["mean_drift"] = dm;
    sum["l2_relative_drift"] = dl2;
    ctx.verdict("mean_conserved", dm <= 1e-13 * std::max(1.0, w0.max_abs()), "|mean(T) - mean(0)| = " + fmt(dm));
    ctx.verdict("l2_conserved", dl2 <= 1e-6, "relative L2 drift = " + fmt(dl2));
  } else {
    const double e = kinetic_energy(w);
    const double res = e0 > 0.0 ? std::abs(e + 2.0 * eps * dissipated - e0) / e0 : 0.0;
    sum["energy_balance_residual"] = res;
    ctx.verdict("energy_balance", res <= 1e-5, "relative energy balance residual = " + fmt(res));
  }
  ctx.svg("trajectory.svg", "energy and enstrophy", "t", [&] {
    std::vector<double> t;
    for (const auto& r : traj.rows) t.push_back(std::stod(r[0]));
    return t;
  }(), [&] {
    Series a{"energy", {}}, b{"enstrophy", {}};
    for (const auto& r : traj.rows) {
      a.y.push_back(std::stod(r[4]));
      b.y.push_back(std::stod(r[5]));
    }
    return std::vector<Series>{a, b};
  }());
  return ctx.finish();
}

// ---------------------------------------------------------------- invlimit

inline RunResult cmd_invlimit(const ExperimentConfig& cfg) {
  if (cfg.epsilons.size() < 3) throw ConfigError("need >= 3 viscosities");
  for (double e : cfg.epsilons)
    if (!(e > 0.0)) throw ConfigError("viscosities must be > 0");
  RunContext ctx(cfg);
  const auto w0 = initial_field(cfg);
  const auto steps = static_cast<std::size_t>(std::ceil(cfg.horizon / cfg.dt - 1e-9));
  const double dt = cfg.horizon / static_cast<double>(steps);
  const std::size_t every = std::max<std::size_t>(1, steps / cfg.samples);
  std::vector<double> times{0.0};
  for (std::size_t s = every; s <= steps; s += every) times.push_back(dt * static_cast<double>(s));
  if (steps % every != 0) times.push_back(cfg.horizon);

  // Run 0 is the Euler reference, run k > 0 uses epsilons[k-1].
  ctx.stage("integrate");
  std::vector<std::vector<ScalarField>> runs(cfg.epsilons.size() + 1);
  parallel_for(runs.size(), [&](std::size_t r) {
    const double eps = r == 0 ? 0.0 : cfg.epsilons[r - 1];
    ScalarField w = w0;
    runs[r].push_back(w);
    for (std::size_t s = 1; s <= steps; ++s) {
      w = eps == 0.0 ? euler_step(w, dt, 1.0, cfg.dealias) : ns_step(w, eps, dt, 2.0, cfg.dealias);
      if (s % every == 0 || s == steps) runs[r].push_back(w);
    }
  });

  ctx.stage("errors");
  std::vector<std::vector<double>> errors(cfg.epsilons.size(), std::vector<double>(times.size()));
  parallel_for(cfg.epsilons.size() * times.size(), [&](std::size_t idx) {
    const std::size_t e = idx / times.size(), k = idx % times.size();
    errors[e][k] = kinetic_energy(runs[e + 1][k] - runs[0][k]);
  });
  const auto fit = fit_rate(times, cfg.epsilons, errors);

  ctx.stage("growth");
  const auto fam = make_ball_family(w0.grid(), cfg.stride, cfg.jmax);
  std::vector<std::pair<double, double>> norms(times.size());
  parallel_for(times.size(), [&](std::size_t k) {
    const auto& w = runs[0][k];
    norms[k] = {times[k], lamo_norm(w, alpha_schedule(times[k], cfg.delta), fam).value + w.l2_norm()};
  });
  const auto growth = apriori_growth_check(norms, cfg.delta);
  const double c0 = std::max(growth.c0_hat, 1e-12);

  ctx.stage("write");
  {
    std::vector<std::string> header{"t"};
    for (double e : cfg.epsilons) header.push_back("g_eps_" + format_number(e));
    CsvTable t(header);
    for (std::size_t k = 0; k < times.size(); ++k) {
      std::vector<CsvTable::Cell> row{times[k]};
      for (std::size_t e = 0; e < cfg.epsilons.size(); ++e) row.emplace_back(errors[e][k]);
      t.add(row);
    }
    ctx.csv("errors.csv", t);
  }
  {
    CsvTable t({"t", "slope", "exponent", "residual", "flag"});
    for (std::size_t k = 0; k < times.size(); ++k)
      t.add({times[k], fit.slope[k], fit.exponent[k], fit.residual[k], fit.flags[k]});
    ctx.csv("rate_fit.csv", t);
  }
  {
    CsvTable t({"t", "norm", "alpha", "beta_lbmo", "beta_lmo", "half_beta_lbmo"});
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double bl = beta_lbmo(times[k], c0);
      t.add({times[k], norms[k].second, alpha_schedule(times[k], cfg.delta), bl, beta_lmo(times[k], c0, cfg.delta),
             0.5 * bl});
    }
    ctx.csv("theory.csv", t);
  }
  {
    const double bt = beta_lbmo(cfg.horizon, c0);
    CsvTable t({"epsilon", "c0_hat", "beta_T", "admissible"});
    for (double e : cfg.epsilons) t.add({e, c0, bt, epsilon_admissible(c0, cfg.horizon, e, bt)});
    ctx.csv("admissibility.csv", t);
  }

  auto& sum = ctx.result().summary;
  sum["c0_hat"] = growth.c0_hat;
  sum["exponents"] = json::array();
  for (std::size_t k = 0; k < times.size(); ++k)
    if (fit.defined(k)) sum["exponents"].push_back({{"t", times[k]}, {"exponent", fit.exponent[k]}});

  bool all_defined = true;
  double min_exp = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!fit.defined(k)) all_defined = false;
    else min_exp = std::min(min_exp, fit.exponent[k]);
  }
  if (is_smooth_data(cfg)) {
    ctx.verdict("smooth_rate_floor", all_defined && min_exp >= 0.5,
                "min fitted per-||U|| exponent over t > 0 = " + fmt(min_exp) + " (floor 0.5)");
  } else {
    bool monotone = all_defined;
    bool above_theory = all_defined;
    for (std::size_t k = 1; k < times.size(); ++k) {
      if (!fit.defined(k)) continue;
      if (k + 1 < times.size() && fit.defined(k + 1) && fit.exponent[k + 1] > fit.exponent[k] + 1e-12)
        monotone = false;
      if (fit.exponent[k] < 0.9 * beta_lmo(times[k], c0, cfg.delta)) above_theory = false;
    }
    const double floor = 0.5 * (1.0 - cfg.delta) - 0.05;
    ctx.verdict("rough_rate_monotone", monotone, "fitted exponent non-increasing in t");
    ctx.verdict("rough_rate_floor", all_defined && min_exp >= floor,
                "min fitted exponent = " + fmt(min_exp) + " (floor " + fmt(floor) + ")");
    ctx.verdict("rough_rate_vs_beta_lmo", above_theory, "exponent >= 0.9 beta_lmo(t, C0_hat, delta)");
  }
  ctx.verdict("growth_constant_finite", growth.finite, "C0_hat = " + fmt(growth.c0_hat));

  std::vector<double> tt(times.begin() + 1, times.end());
  Series fitted{"fitted exponent", std::vector<double>(fit.exponent.begin() + 1, fit.exponent.end())};
  Series half{"beta_lbmo/2", {}};
  for (double t : tt) half.y.push_back(0.5 * beta_lbmo(t, c0));
  ctx.svg("rate_fit.svg", "fitted exponent of epsilon in ||U||", "t", tt, {fitted, half});
  return ctx.finish();
}

// ---------------------------------------------------------------- trotter

inline RunResult cmd_trotter(const ExperimentConfig& cfg) {
  if (cfg.n_subintervals.empty()) throw ConfigError("n_subintervals must not be empty");
  RunContext ctx(cfg);
  const auto w0 = initial_field(cfg);
  const auto max_n = *std::max_element(cfg.n_subintervals.begin(), cfg.n_subintervals.end());
  SchemeConfig sc;
  sc.epsilon = cfg.epsilon;
  sc.horizon = cfg.horizon;
  sc.n_subintervals = max_n;
  sc.inner_dt = std::min(cfg.inner_dt, sc.subinterval() / 4.0);
  sc.dealias = cfg.dealias;
  sc.fractional_sigma = cfg.model == "fracns" ? cfg.sigma : 2.0;
  sc.validate();
  SchemeConfig sc_cmp = sc;
  sc_cmp.inner_dt = cfg.inner_dt;

  ctx.stage("splitting_error");
  const auto cmp = trotter_vs_ns(w0, sc_cmp, cfg.n_subintervals);
  const double w0n = w0.l2_norm();
  {
    CsvTable t({"n", "error", "relative_error", "n_times_error"});
    for (const auto& r : cmp.rows)
      t.add({r.n, r.error, w0n > 0 ? r.error / w0n : r.error, static_cast<double>(r.n) * r.error});
    ctx.csv("trotter_errors.csv", t);
  }
  double max_err = 0.0;
  for (const auto& r : cmp.rows) max_err = std::max(max_err, r.error);
  auto& sum = ctx.result().summary;
  sum["fitted_order"] = cmp.fitted_order;
  sum["max_error"] = max_err;
  if (max_err <= 1e-8) {
    ctx.verdict("splitting_error", true, "invariant profile: max error = " + fmt(max_err));
  } else {
    ctx.verdict("splitting_order", cmp.fitted_order >= cfg.min_order,
                "fitted order = " + fmt(cmp.fitted_order) + " (min " + fmt(cfg.min_order) + ")");
  }

  if (cfg.epsilon == 0.0) {
    // With no viscosity the scheme is transport at doubled speed on half the
    // subintervals; compare with that Euler run directly.
    ctx.stage("euler_reference");
    const double half = 0.5 * cfg.horizon;
    const auto steps = static_cast<std::size_t>(std::ceil(half / cmp.reference_dt - 1e-9));
    const double dt = half / static_cast<double>(steps);
    ScalarField ref = w0;
    for (std::size_t s = 0; s < steps; ++s) ref = euler_step(ref, dt, 2.0, cfg.dealias);
    CsvTable t({"n", "error_vs_doubled_euler", "n_times_error"});
    double worst = 0.0;
    std::vector<double> errs(cfg.n_subintervals.size());
    parallel_for(cfg.n_subintervals.size(), [&](std::size_t k) {
      SchemeConfig c = sc;
      c.n_subintervals = cfg.n_subintervals[k];
      c.inner_dt = std::min(cfg.inner_dt, c.subinterval() / 4.0);
      auto no_track = [](const ScalarField&) { return 0.0; };
      errs[k] = (trotter_run(w0, c, no_track, false).final_state() - ref).l2_norm();
    });
    for (std::size_t k = 0; k < errs.size(); ++k) {
      const double ne = static_cast<double>(cfg.n_subintervals[k]) * errs[k];
      t.add({cfg.n_subintervals[k], errs[k], ne});
      worst = std::max(worst, ne / std::max(w0n, 1e-300));
    }
    ctx.csv("doubled_euler.csv", t);
    sum["doubled_euler_max_n_error"] = worst;
    ctx.verdict("doubled_euler_reference", worst <= 1e-2, "max n*error/||w0|| = " + fmt(worst));
  }

  ctx.stage("uniform_bound");
  TrackingNorm tracker{cfg.tracking_p, cfg.tracking_alpha, cfg.stride, cfg.jmax};
  const double x0 = tracker(w0);
  std::vector<double> mu(cfg.n_subintervals.size());
  parallel_for(cfg.n_subintervals.size(), [&](std::size_t k) {
    SchemeConfig c = sc;
    c.n_subintervals = cfg.n_subintervals[k];
    c.inner_dt = std::min(cfg.inner_dt, c.subinterval() / 4.0);
    mu[k] = fit_recurrence_constant(trotter_run(w0, c, tracker, false));
  });
  const double mu_hat = *std::max_element(mu.begin(), mu.end());
  const double t_bound = mu_hat > 0.0 && x0 > 0.0 ? std::log(2.0) / (2.0 * mu_hat * x0)
                                                  : std::numeric_limits<double>::infinity();
  const double t_used = std::min(cfg.horizon, t_bound);
  std::vector<TrotterTrajectory> trs(cfg.n_subintervals.size());
  parallel_for(cfg.n_subintervals.size(), [&](std::size_t k) {
    SchemeConfig c = sc;
    c.horizon = t_used;
    c.n_subintervals = cfg.n_subintervals[k];
    c.inner_dt = std::min(cfg.inner_dt, c.subinterval() / 4.0);
    trs[k] = trotter_run(w0, c, tracker, cfg.write_fields && cfg.n_subintervals[k] == max_n);
  });
  CsvTable bound({"n", "mu_hat_n", "mu_hat", "x0", "t_used", "max_ratio"});
  CsvTable hist({"n", "k", "t", "stage", "norm", "running_sup"});
  double worst_ratio = 0.0;
  for (std::size_t k = 0; k < trs.size(); ++k) {
    const auto x = trs[k].running_sup();
    const double ratio = x.back() / x0;
    worst_ratio = std::max(worst_ratio, ratio);
    bound.add({cfg.n_subintervals[k], mu[k], mu_hat, x0, t_used, ratio});
    for (std::size_t i = 0; i < x.size(); ++i)
      hist.add({cfg.n_subintervals[k], i, trs[k].times[i],
                i == 0 ? std::string("initial") : std::string(to_string(trs[k].stage_tags[i - 1])),
                trs[k].norm_history[i], x[i]});
  }
  for (std::size_t k = 0; k < trs.size(); ++k) {
    if (cfg.n_subintervals[k] != max_n || !cfg.write_fields) continue;
    const auto& tr = trs[k];
    json traj{{"n_subintervals", max_n}, {"times", tr.times}, {"norm_history", tr.norm_history}};
    traj["stage_tags"] = json::array();
    for (auto tag : tr.stage_tags) traj["stage_tags"].push_back(to_string(tag));
    traj["snapshots"] = json::array();
    for (std::size_t i = 0; i < tr.snapshots.size(); ++i) {
      char name[40];
      std::snprintf(name, sizeof name, "trotter_%05zu.fld", i);
      ctx.field(name, tr.snapshots[i], {{"t", tr.times[i]}, {"n_subintervals", max_n}});
      traj["snapshots"].push_back(name);
    }
    ctx.text("trajectory.json", traj.dump(2) + "\n");
    break;
  }
  ctx.csv("uniform_bound.csv", bound);
  ctx.csv("norm_history.csv", hist);
  sum["mu_hat"] = mu_hat;
  sum["x0"] = x0;
  sum["t_used"] = t_used;
  sum["max_bound_ratio"] = worst_ratio;
  ctx.verdict("uniform_bound", worst_ratio <= 2.1,
              "max_k X_k / X_0 = " + fmt(worst_ratio) + " on [0, " + fmt(t_used) + "] (limit 2.1)");

  std::vector<double> ns, es;
  for (const auto& r : cmp.rows) ns.push_back(static_cast<double>(r.n)), es.push_back(r.error);
  ctx.svg("trotter_errors.svg", "splitting error vs n", "n", ns, {{"error", es}}, true);
  return ctx.finish();
}

// ---------------------------------------------------------------- norms

inline RunResult cmd_norms(const ExperimentConfig& cfg) {
  RunContext ctx(cfg);
  auto sizes = cfg.grid_sizes.empty() ? std::vector<std::size_t>{cfg.n} : cfg.grid_sizes;
  std::sort(sizes.begin(), sizes.end());
  std::vector<std::string> checks = cfg.checks;
  if (checks.empty()) {
    if (cfg.data == "lmo_exemplar") checks = {"lamo_stable", "sup_diverges"};
    if (cfg.data == "sign_step") checks = {"jmax_divergence", "bmo_stable"};
  }

  ctx.stage("norms");
  std::vector<NormReport> reps;
  CsvTable t({"n", "quantity", "value"});
  json reports = json::array();
  for (auto n : sizes) {
    const auto f = initial_field(cfg, n);
    const auto fam = make_ball_family(f.grid(), cfg.stride, cfg.jmax);
    auto rep = norm_report(f, fam, cfg.ps, cfg.alphas, cfg.q);
    for (const auto& [p, v] : rep.lp) t.add({n, "lp_" + format_number(p), v});
    t.add({n, "sup", rep.sup});
    t.add({n, "bmo", rep.bmo});
    for (const auto& [a, e] : rep.lamo) t.add({n, "lamo_" + format_number(a), e.value});
    t.add({n, "lbmo", rep.lbmo.value});
    t.add({n, "jmax", fam.exponents().back()});
    auto j = to_json(rep);
    j["n"] = n;
    reports.push_back(j);
    reps.push_back(std::move(rep));
  }
  ctx.csv("norms.csv", t);
  ctx.text("norm_report.json", reports.dump(2) + "\n");

  auto lamo1 = [&](const NormReport& r) {
    auto it = r.lamo.find(1.0);
    if (it == r.lamo.end()) throw ConfigError("checks need alpha = 1 in 'alphas'");
    return it->second.value;
  };
  auto& sum = ctx.result().summary;
  for (const auto& c : checks) {
    if (c == "lamo_stable") {
      double lo = 1e300, hi = -1e300;
      for (const auto& r : reps) lo = std::min(lo, lamo1(r)), hi = std::max(hi, lamo1(r));
      const double spread = (hi - lo) / lo;
      sum["lamo1_spread"] = spread;
      ctx.verdict("lamo_stable", spread <= 0.10, "relative spread of lamo(1) across grids = " + fmt(spread));
    } else if (c == "sup_diverges") {
      bool ok = reps.size() >= 2;
      double min_inc = std::numeric_limits<double>::infinity();
      for (std::size_t k = 1; k < reps.size(); ++k) {
        const double inc = reps[k].sup - reps[k - 1].sup;
        const double doublings = std::log2(static_cast<double>(sizes[k]) / static_cast<double>(sizes[k - 1]));
        min_inc = std::min(min_inc, inc / doublings);
      }
      ok = ok && min_inc >= 0.2;
      sum["sup_min_increment_per_doubling"] = min_inc;
      ctx.verdict("sup_diverges", ok, "min sup increment per doubling = " + fmt(min_inc) + " (need >= 0.2)");
    } else if (c == "bmo_stable") {
      double lo = 1e300, hi = -1e300;
      for (const auto& r : reps) lo = std::min(lo, r.bmo), hi = std::max(hi, r.bmo);
      const double spread = (hi - lo) / lo;
      sum["bmo_spread"] = spread;
      ctx.verdict("bmo_stable", spread <= 0.05, "relative spread of bmo across grids = " + fmt(spread));
    } else if (c == "jmax_divergence") {
      const auto f = initial_field(cfg, sizes.back());
      const int top = max_dyadic_exponent(f.grid());
      CsvTable s({"n", "jmax", "lamo_1", "bmo"});
      bool increasing = top >= 3;
      double prev = -1.0;
      for (int j = 2; j <= top; ++j) {
        const auto fam = make_ball_family(f.grid(), cfg.stride, j);
        const double v = lamo_norm(f, 1.0, fam, cfg.q).value;
        s.add({sizes.back(), j, v, bmo_norm(f, fam, cfg.q).value});
        if (v <= prev) increasing = false;
        prev = v;
      }
      ctx.csv("jmax_sweep.csv", s);
      ctx.verdict("jmax_divergence", increasing, "lamo(1) strictly increasing in jmax up to " + std::to_string(top));
    } else if (c != "john_nirenberg") {
      throw ConfigError("unknown check '" + c + "'");
    }
  }

  if (cfg.john_nirenberg.enabled) {
    ctx.stage("john_nirenberg");
    const auto& s = cfg.john_nirenberg;
    const auto f = initial_field(cfg, s.n ? s.n : sizes.front());
    const auto& g = f.grid();
    const Ball q{g.size() / 2, g.size() / 2, s.radius};
    double top = 0.0;
    {
      const auto st = make_stencil(g, s.radius);
      const double m = viscidlab::detail::ball_mean(f, st, q.i, q.j);
      viscidlab::detail::for_each_in_ball(f, st, q.i, q.j, [&](double v) { top = std::max(top, std::abs(v - m)); });
    }
    std::vector<double> lambdas;
    for (std::size_t k = 1; k <= s.lambdas; ++k)
      lambdas.push_back(top * static_cast<double>(k) / static_cast<double>(s.lambdas + 1));
    CsvTable tail({"alpha", "lambda", "lambda_pow", "fraction"});
    CsvTable fits({"alpha", "slope", "intercept", "r_squared", "points", "c1"});
    for (double a : s.alphas) {
      const auto p = john_nirenberg_profile(f, q, a, lambdas);
      for (std::size_t k = 0; k < lambdas.size(); ++k)
        tail.add({a, lambdas[k], std::pow(lambdas[k], p.exponent), p.fractions[k]});
      fits.add({a, p.fit.slope, p.fit.intercept, p.fit.r_squared, p.fit_points, p.c1});
      ctx.verdict("john_nirenberg_alpha_" + format_number(a), p.fit_points >= 3 && p.fit.r_squared >= s.min_r_squared,
                  "R^2 = " + fmt(p.fit.r_squared) + " over " + std::to_string(p.fit_points) + " levels");
    }
    ctx.csv("john_nirenberg_tail.csv", tail);
    ctx.csv("john_nirenberg_fit.csv", fits);
  }

  if (sizes.size() > 1) {
    std::vector<double> x;
    Series sup{"sup", {}}, l1{"lamo(1)", {}};
    for (std::size_t k = 0; k < reps.size(); ++k) {
      x.push_back(std::log2(static_cast<double>(sizes[k])));
      sup.y.push_back(reps[k].sup);
      auto it = reps[k].lamo.find(1.0);
      l1.y.push_back(it == reps[k].lamo.end() ? std::nan("") : it->second.value);
    }
    ctx.svg("norms.svg", "norms under refinement", "log2 n", x, {sup, l1});
  }
  return ctx.finish();
}

// ---------------------------------------------------------------- compose

inline LatticeMap parse_map(const json& m, std::size_t stride) {
  const auto type = m.at("type").get<std::string>();
  if (type == "translation") {
    const long s = static_cast<long>(stride);
    return Translation{m.value("di", 3L * s), m.value("dj", 5L * s)};
  }
  if (type == "rotation") return QuarterRotation{m.value("turns", 1)};
  if (type == "shear")
    return IntegerShear{m.value("a", 1L), m.value("b", 1L), m.value("c", 0L), m.value("d", 1L)};
  throw ConfigError("unknown map type '" + type + "'");
}

inline std::string describe_map(const LatticeMap& m) {
  return std::visit(
      [](const auto& mp) -> std::string {
        using T = std::decay_t<decltype(mp)>;
        if constexpr (std::is_same_v<T, Translation>) {
          return "translation(" + std::to_string(mp.di) + "," + std::to_string(mp.dj) + ")";
        } else if constexpr (std::is_same_v<T, QuarterRotation>) {
          return "rotation(" + std::to_string(mp.turns) + ")";
        } else {
          return "shear(" + std::to_string(mp.a) + "," + std::to_string(mp.b) + "," + std::to_string(mp.c) + "," +
                 std::to_string(mp.d) + ")";
        }
      },
      m);
}

inline RunResult cmd_compose(const ExperimentConfig& cfg) {
  RunContext ctx(cfg);
  const PeriodicGrid g(cfg.n, cfg.length);
  const auto fam = make_ball_family(g, cfg.stride, cfg.jmax);
  std::vector<LatticeMap> maps;
  if (cfg.maps.empty()) {
    maps = {parse_map({{"type", "translation"}}, fam.stride()), QuarterRotation{1}, IntegerShear{1, 1, 0, 1}};
  } else {
    for (const auto& m : cfg.maps) maps.push_back(parse_map(m, fam.stride()));
  }
  const auto corpus = cfg.corpus.empty() ? std::vector<std::string>{cfg.data} : cfg.corpus;
  std::vector<NormKind> kinds;
  for (const auto& k : cfg.norm_kinds) kinds.push_back(norm_kind_from_string(k));

  struct Row {
    std::string data, map;
    double k;
    NormKind kind;
    CompositionRatio r;
  };
  std::vector<Row> rows;
  ctx.stage("ratios");
  for (const auto& name : corpus) {
    const auto f = make_initial_data(g, name, name == cfg.data ? cfg.data_params : json::object(), cfg.seed);
    for (const auto& m : maps) {
      const auto composed = compose(f, m);
      const double kphi = bilipschitz_constant(m);
      for (auto kind : kinds)
        rows.push_back({name, describe_map(m), kphi, kind, composition_ratio(f, composed, kphi, kind, cfg.compose_alpha, fam)});
    }
  }
  double c_hat = 0.0;
  for (const auto& r : rows)
    if (r.kind == NormKind::bmo && r.k > 1.0) c_hat = std::max(c_hat, (r.r.ratio - 1.0) / std::log(r.k));

  CsvTable t({"data", "map", "K", "norm", "before", "after", "ratio", "bound_1_plus_c_logK"});
  bool iso_ok = true, shear_upper = true, shear_lower = true;
  bool have_iso = false, have_shear = false;
  double iso_dev = 0.0, shear_min = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    const double bound = 1.0 + c_hat * std::log(r.k);
    t.add({r.data, r.map, r.k, to_string(r.kind), r.r.norm_before, r.r.norm_after, r.r.ratio, bound});
    if (r.k == 1.0) {
      have_iso = true;
      iso_dev = std::max(iso_dev, std::abs(r.r.ratio - 1.0));
      if (std::abs(r.r.ratio - 1.0) > 1e-6) iso_ok = false;
    } else if (r.kind == NormKind::bmo) {
      have_shear = true;
      shear_min = std::min(shear_min, r.r.ratio);
      if (r.r.ratio > bound * (1.0 + 1e-12)) shear_upper = false;
      if (!(r.r.ratio > 1.0 - 1e-6)) shear_lower = false;
    }
  }
  ctx.csv("compose.csv", t);
  auto& sum = ctx.result().summary;
  sum["c_hat"] = c_hat;
  sum["isometry_max_deviation"] = iso_dev;
  if (have_iso) ctx.verdict("isometry_invariance", iso_ok, "max |ratio - 1| over isometries = " + fmt(iso_dev));
  if (have_shear) {
    sum["shear_min_ratio"] = shear_min;
    ctx.verdict("shear_log_bound", shear_upper, "BMO ratio <= 1 + c log K with corpus-wide c = " + fmt(c_hat));
    ctx.verdict("shear_lower", shear_lower, "min BMO ratio under non-isometric maps = " + fmt(shear_min));
  }
  return ctx.finish();
}

// ---------------------------------------------------------------- flow

inline RunResult cmd_flow(const ExperimentConfig& cfg) {
  RunContext ctx(cfg);
  const auto& fs_ = cfg.flow;
  const PeriodicGrid g(cfg.n, cfg.length);
  const double L = g.length();
  const double kx = g.wavenumber_unit();

  // Seeds: lattice, then dyadic pairs, then small triangles.
  std::vector<Vec2> seeds;
  for (std::size_t i = 0; i < fs_.seeds_per_axis; ++i)
    for (std::size_t j = 0; j < fs_.seeds_per_axis; ++j)
      seeds.push_back({L * (static_cast<double>(i) + 0.25) / static_cast<double>(fs_.seeds_per_axis),
                       L * (static_cast<double>(j) + 0.25) / static_cast<double>(fs_.seeds_per_axis)});
  const std::size_t lattice_count = seeds.size();
  std::vector<Vec2> bases;
  for (std::size_t i = 0; i < fs_.pair_bases; ++i)
    for (std::size_t j = 0; j < fs_.pair_bases; ++j)
      bases.push_back({L * (static_cast<double>(i) + 0.6) / static_cast<double>(fs_.pair_bases),
                       L * (static_cast<double>(j) + 0.35) / static_cast<double>(fs_.pair_bases)});
  auto pairs = make_paired_seeds(bases, fs_.pair_jmin, fs_.pair_jmax, L);
  for (auto& p : pairs.pairs) p.a += lattice_count, p.b += lattice_count;
  seeds.insert(seeds.end(), pairs.seeds.begin(), pairs.seeds.end());
  std::vector<std::array<std::size_t, 3>> tris;
  const double side = 0.5 * g.spacing();
  for (std::size_t k = 0; k < fs_.triangles; ++k) {
    const double a = L * (static_cast<double>(k) + 0.5) / static_cast<double>(fs_.triangles);
    const Vec2 p{a, std::fmod(0.37 * L + 2.3 * a, L)};
    const std::size_t base = seeds.size();
    seeds.push_back(p);
    seeds.push_back(p + Vec2{side, 0.0});
    seeds.push_back(p + Vec2{0.0, side});
    tris.push_back({base, base + 1, base + 2});
  }

  // Velocity and its Lipschitz integral.
  ctx.stage("velocity");
  const double t_end = cfg.horizon;
  const auto snaps = static_cast<std::size_t>(std::max(1.0, std::round(t_end / fs_.snapshot_dt)));
  const double snap_dt = t_end / static_cast<double>(snaps);
  std::vector<double> snap_times, lip;
  for (std::size_t k = 0; k <= snaps; ++k) snap_times.push_back(snap_dt * static_cast<double>(k));

  auto run = [&](const auto& src, double max_speed) {
    const double dt_default = max_speed > 0.0 ? std::min(0.01, 0.25 * g.spacing() / max_speed) : 0.01;
    const double dt_req = fs_.dt > 0.0 ? fs_.dt : dt_default;
    const auto per_snap = static_cast<std::size_t>(std::ceil(snap_dt / dt_req - 1e-9));
    const double dt = snap_dt / static_cast<double>(per_snap);
    ctx.stage("tracers");
    auto fwd = integrate_flow(src, seeds, 0.0, t_end, dt, per_snap);
    auto bwd = integrate_flow(src, fwd.final_positions(), t_end, 0.0, dt);
    double fb = 0.0;
    for (std::size_t k = 0; k < seeds.size(); ++k)
      fb = std::max(fb, torus_distance(bwd.final_positions()[k], wrap_point(seeds[k], L), L));
    return std::tuple{std::move(fwd), fb, dt};
  };

  FlowMap fwd;
  double fb = 0.0, dt_used = 0.0;
  std::vector<double> v_at;
  if (fs_.velocity == "zero" || fs_.velocity == "translation" || fs_.velocity == "shear") {
    const double a = fs_.velocity == "zero" ? 0.0 : fs_.amplitude;
    const bool sh = fs_.velocity == "shear";
    AnalyticVelocity src(
        [a, sh, kx](double, Vec2 x) { return sh ? Vec2{0.0, a * std::sin(kx * x.x1)} : Vec2{a, 0.0}; }, L,
        std::abs(a), g.spacing());
    std::tie(fwd, fb, dt_used) = run(src, std::abs(a));
    const double lip_const = sh ? std::abs(a) * kx : 0.0;
    for (double t : fwd.times) v_at.push_back(lip_const * t);
  } else if (fs_.velocity == "euler") {
    auto w = initial_field(cfg);
    std::vector<VectorField> fields;
    const auto sub = static_cast<std::size_t>(std::ceil(snap_dt / cfg.dt - 1e-9));
    const double dt = snap_dt / static_cast<double>(sub);
    for (std::size_t k = 0; k <= snaps; ++k) {
      if (k > 0)
        for (std::size_t s = 0; s < sub; ++s) w = euler_step(w, dt, 1.0, cfg.dealias);
      fields.push_back(velocity_from_vorticity(w));
      lip.push_back(velocity_lipschitz(w));
    }
    SnapshotVelocity src(snap_times, fields);
    std::tie(fwd, fb, dt_used) = run(src, src.max_speed());
    const auto v = cumulative_integral(snap_times, lip);
    for (double t : fwd.times) {
      const auto k = static_cast<std::size_t>(std::llround(t / snap_dt));
      v_at.push_back(v.at(std::min(k, v.size() - 1)));
    }
  } else {
    throw ConfigError("unknown flow velocity '" + fs_.velocity + "'");
  }

  ctx.stage("diagnostics");
  CsvTable reg({"t", "K_hat", "V_hat", "log_K_hat", "bound_holds", "pairs"});
  bool lip_ok = true;
  double worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < fwd.times.size(); ++k) {
    const auto est = bilipschitz_constant(fwd, k);
    const auto rep = lipschitz_bound_check(fwd, v_at[k], fs_.lipschitz_tolerance, k);
    lip_ok = lip_ok && rep.holds;
    worst_margin = std::min(worst_margin, rep.margin);
    reg.add({fwd.times[k], est.value, v_at[k], std::log(est.value), rep.holds, est.pairs});
  }
  ctx.csv("flow_regularity.csv", reg);

  const auto prof = modulus_profile(fwd, pairs, fs_.alpha);
  CsvTable mod({"separation", "growth", "ratio"});
  for (std::size_t k = 0; k < prof.separations.size(); ++k)
    mod.add({prof.separations[k], prof.growth[k], prof.ratio[k]});
  ctx.csv("modulus.csv", mod);

  const auto a0 = triangle_areas(fwd.positions.front(), tris, L);
  const auto a1 = triangle_areas(fwd.final_positions(), tris, L);
  double area_dev = 0.0;
  for (std::size_t k = 0; k < a0.size(); ++k) area_dev = std::max(area_dev, std::abs(a1[k] / a0[k] - 1.0));

  CsvTable tracers({"t", "seed_id", "x1", "x2"});
  for (std::size_t k = 0; k < fwd.times.size(); ++k)
    for (std::size_t s = 0; s < lattice_count; ++s)
      tracers.add({fwd.times[k], s, fwd.positions[k][s].x1, fwd.positions[k][s].x2});
  ctx.csv("tracers.csv", tracers);

  auto& sum = ctx.result().summary;
  sum["tracer_dt"] = dt_used;
  sum["forward_backward_error"] = fb;
  sum["area_max_relative_change"] = area_dev;
  sum["fitted_eta_v"] = prof.fitted_eta_v;
  sum["final_K_hat"] = std::exp(std::stod(reg.rows.back()[3]));
  sum["final_V_hat"] = v_at.back();
  ctx.verdict("lipschitz_bound", lip_ok,
              "log K_hat <= V_hat (1 + " + fmt(fs_.lipschitz_tolerance) + ") at every time; min margin " +
                  fmt(worst_margin));
  ctx.verdict("forward_backward", fb < 0.25 * g.spacing(),
              "max |psi^-1(psi(x)) - x| = " + fmt(fb) + " (limit " + fmt(0.25 * g.spacing()) + ")");
  ctx.verdict("area_preservation", area_dev <= 0.01, "max relative triangle area change = " + fmt(area_dev));
  if (fs_.velocity == "zero") {
    bool ones = true;
    for (double r : prof.ratio) ones = ones && std::abs(r - 1.0) <= 1e-12;
    ctx.verdict("zero_velocity_identity", ones, "all growth ratios equal 1");
  }

  std::vector<double> xs;
  Series lk{"log K_hat", {}}, vv{"V_hat", {}};
  for (std::size_t k = 0; k < fwd.times.size(); ++k) {
    xs.push_back(fwd.times[k]);
    lk.y.push_back(std::stod(reg.rows[k][3]));
    vv.y.push_back(v_at[k]);
  }
  ctx.svg("flow_regularity.svg", "bi-Lipschitz growth", "t", xs, {lk, vv});
  return ctx.finish();
}

// ---------------------------------------------------------------- dispatch

inline RunResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.workers > 0) set_default_workers(cfg.workers);
  if (cfg.command == "simulate") return cmd_simulate(cfg);
  if (cfg.command == "invlimit") return cmd_invlimit(cfg);
  if (cfg.command == "trotter") return cmd_trotter(cfg);
  if (cfg.command == "norms") return cmd_norms(cfg);
  if (cfg.command == "compose") return cmd_compose(cfg);
  if (cfg.command == "flow") return cmd_flow(cfg);
  throw ConfigError("unknown command '" + cfg.command + "'");
}

}  // namespace viscidlab::lab
