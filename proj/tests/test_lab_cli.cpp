#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "viscidlab/io.hpp"
#include "viscidlab/lab.hpp"

using namespace viscidlab;
using lab::ConfigError;
using lab::ExperimentConfig;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("viscidlab_lab_test_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig small_simulate(const fs::path& out) {
  auto c = ExperimentConfig::from_json(
      {{"command", "simulate"}, {"n", 32}, {"horizon", 0.1}, {"dt", 0.01}, {"samples", 2}, {"epsilon", 0.01}});
  c.output_dir = out.string();
  return c;
}

std::string expect_config_error(const nlohmann::json& j) {
  try {
    lab::run_experiment(ExperimentConfig::from_json(j));
  } catch (const std::invalid_argument& e) {
    return e.what();
  }
  ADD_FAILURE() << "config accepted: " << j.dump();
  return {};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(VISCIDLAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
}  // namespace

TEST(Csv, QuotingFollowsRfc4180) {
  CsvTable t({"name", "value"});
  t.add({std::string("plain"), 1.5});
  t.add({std::string("with,comma"), 2});
  t.add({std::string("say \"hi\""), true});
  EXPECT_EQ(t.str(), "name,value\r\nplain,1.5\r\n\"with,comma\",2\r\n\"say \"\"hi\"\"\",true\r\n");
  EXPECT_THROW(t.add({1.0}), std::invalid_argument);
}

TEST(Io, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Io, NumbersRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 6.02214076e23}) EXPECT_EQ(std::stod(format_number(v)), v);
}

TEST(Config, DefaultsAndRoundTrip) {
  const auto c = ExperimentConfig::from_json(nlohmann::json::object());
  EXPECT_EQ(c.command, "simulate");
  EXPECT_EQ(c.n, 64u);
  EXPECT_EQ(ExperimentConfig::from_json(c.to_json()).to_json(), c.to_json());
  const auto f = ExperimentConfig::from_json(nlohmann::json::parse(read_text(VISCIDLAB_SOURCE_DIR "/configs/norms_lmo_exemplar.json")));
  EXPECT_TRUE(f.john_nirenberg.enabled);
  EXPECT_EQ(ExperimentConfig::from_json(f.to_json()).to_json(), f.to_json());
}

TEST(Config, Errors) {
  EXPECT_THROW(ExperimentConfig::from_json({{"colour", "red"}}), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json({{"n", "many"}}), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json({{"flow", {{"speed", 2}}}}), ConfigError);
  EXPECT_NE(expect_config_error({{"n", 100}}).find("n must be power of two"), std::string::npos);
  EXPECT_NE(expect_config_error({{"command", "trotter"}, {"n_subintervals", {4, 7}}}).find("even"), std::string::npos);
  EXPECT_NE(expect_config_error({{"command", "invlimit"}, {"n", 16}, {"epsilons", {0.01}}}).find("need >= 3 viscosities"),
            std::string::npos);
  EXPECT_NE(expect_config_error({{"command", "explode"}}).find("unknown command"), std::string::npos);
}

TEST(Run, SimulateWritesConsistentManifest) {
  const auto out = scratch("manifest");
  const auto res = lab::run_experiment(small_simulate(out));
  EXPECT_TRUE(res.passed());
  ASSERT_TRUE(fs::exists(out / "manifest.json"));
  const auto m = nlohmann::json::parse(read_text(out / "manifest.json"));
  EXPECT_EQ(m.at("artifact"), "viscidlab");
  EXPECT_EQ(m.at("command"), "simulate");
  EXPECT_EQ(m.at("passed"), true);
  EXPECT_TRUE(m.at("timings_seconds").contains("total"));
  ASSERT_FALSE(m.at("files").empty());
  for (const auto& f : m.at("files")) {
    const auto p = out / f.at("name").get<std::string>();
    ASSERT_TRUE(fs::exists(p)) << p;
    EXPECT_EQ(f.at("sha256").get<std::string>(), sha256_file(p));
    EXPECT_EQ(f.at("bytes").get<std::uintmax_t>(), fs::file_size(p));
  }
  EXPECT_NE(res.find("exact_solution"), nullptr);
  fs::remove_all(out);
}

TEST(Run, OutputsIndependentOfWorkerCount) {
  auto a = small_simulate(scratch("w1"));
  auto b = small_simulate(scratch("w3"));
  a.workers = 1;
  b.workers = 3;
  const auto ra = lab::run_experiment(a);
  const auto rb = lab::run_experiment(b);
  ASSERT_EQ(ra.files.size(), rb.files.size());
  for (std::size_t k = 0; k < ra.files.size(); ++k) {
    EXPECT_EQ(ra.files[k].name, rb.files[k].name);
    EXPECT_EQ(ra.files[k].sha256, rb.files[k].sha256) << ra.files[k].name;
  }
  set_default_workers(1);
  fs::remove_all(a.output_dir);
  fs::remove_all(b.output_dir);
}

TEST(Run, ComposeRotationIsExact) {
  const auto out = scratch("compose");
  auto c = ExperimentConfig::from_json({{"command", "compose"},
                                        {"n", 64},
                                        {"corpus", {"sign_step", "taylor_green"}},
                                        {"maps", {{{"type", "rotation"}, {"turns", 1}}}},
                                        {"norm_kinds", {"bmo", "lamo"}}});
  c.output_dir = out.string();
  const auto res = lab::run_experiment(c);
  const auto* v = res.find("isometry_invariance");
  ASSERT_NE(v, nullptr);
  EXPECT_TRUE(v->passed) << v->detail;
  fs::remove_all(out);
}

TEST(Run, ZeroFlowIsIdentity) {
  const auto out = scratch("flow");
  auto c = ExperimentConfig::from_json(
      {{"command", "flow"}, {"n", 32}, {"horizon", 0.5}, {"flow", {{"velocity", "zero"}, {"seeds_per_axis", 6}}}});
  c.output_dir = out.string();
  const auto res = lab::run_experiment(c);
  EXPECT_TRUE(res.passed());
  ASSERT_NE(res.find("zero_velocity_identity"), nullptr);
  EXPECT_TRUE(res.find("zero_velocity_identity")->passed);
  EXPECT_DOUBLE_EQ(res.summary.at("final_K_hat").get<double>(), 1.0);
  fs::remove_all(out);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  fs::create_directories(dir);
  write_text(dir / "bad.json", "{\"n\": 100}");
  write_text(dir / "ok.json", "{\"n\": 32, \"horizon\": 0.05, \"dt\": 0.01, \"samples\": 1}");
  EXPECT_EQ(run_cli("simulate --config " + (dir / "bad.json").string() + " --out " + (dir / "a").string()), 2);
  EXPECT_EQ(run_cli("simulate --config " + (dir / "ok.json").string() + " --out " + (dir / "b").string() + " --quiet"),
            0);
  EXPECT_TRUE(fs::exists(dir / "b" / "manifest.json"));
  EXPECT_NE(run_cli("frobnicate"), 0);
  EXPECT_EQ(run_cli("--version"), 0);
  fs::remove_all(dir);
}
