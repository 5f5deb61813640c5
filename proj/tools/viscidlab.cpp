#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "viscidlab/io.hpp"
#include "viscidlab/lab.hpp"

namespace lab = viscidlab::lab;

int main(int argc, char** argv) {
  CLI::App app{"viscidlab: pseudo-spectral experiments on the periodic box"};
  app.set_version_flag("--version", std::string(VISCIDLAB_VERSION));
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::size_t workers = 0;
  std::uint64_t seed = 0;
  bool quiet = false;
  for (const char* name : {"simulate", "invlimit", "trotter", "norms", "compose", "flow"}) {
    auto* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    sub->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--workers", workers, "worker threads (default: VISCIDLAB_WORKERS or 1)");
    sub->add_option("--seed", seed, "random seed (overrides the config)");
    sub->add_flag("--quiet", quiet, "only print the final status line");
  }
  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  const auto* sub = app.get_subcommands().front();
  try {
    nlohmann::json j = nlohmann::json::object();
    if (!config_path.empty()) j = nlohmann::json::parse(viscidlab::read_text(config_path));
    auto cfg = lab::ExperimentConfig::from_json(j);
    if (cfg.command != command && j.contains("command"))
      std::cerr << "note: config command '" << cfg.command << "' overridden by '" << command << "'\n";
    cfg.command = command;
    if (sub->count("--out")) cfg.output_dir = out_dir;
    if (sub->count("--workers")) cfg.workers = workers;
    if (sub->count("--seed")) cfg.seed = seed;

    const auto res = lab::run_experiment(cfg);
    if (!quiet) {
      for (const auto& v : res.verdicts)
        std::printf("%s  %-28s %s\n", v.passed ? "PASS" : "FAIL", v.name.c_str(), v.detail.c_str());
    }
    std::printf("%s: %s (%zu files in %s)\n", command.c_str(), res.passed() ? "all checks passed" : "checks failed",
                res.files.size() + 1, res.directory.string().c_str());
    return res.passed() ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
