// Command-line front end: train, experiment, verify, report.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "maca/harness/experiment.h"
#include "maca/oracle/verify.h"

namespace fs = std::filesystem;
using namespace maca;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<uint64_t> seed;
  std::optional<std::string> variant;
  std::optional<std::string> out;
  size_t threads = 1;
};

harness::ExperimentConfig LoadWithOverrides(const CommonFlags& flags) {
  harness::ExperimentConfig config = harness::LoadExperimentConfig(flags.config);
  if (flags.seed) config.seeds = {*flags.seed};
  if (flags.variant) config.variants = {advantage::ParseVariant(*flags.variant)};
  if (flags.out) config.out_dir = *flags.out;
  config.Validate();
  return config;
}

int Train(const CommonFlags& flags) {
  const harness::ExperimentConfig config = LoadWithOverrides(flags);
  const auto variant = config.variants.front();
  const uint64_t seed = config.seeds.front();
  const harness::SeedRun run = harness::RunSingle(config, variant, seed, config.out_dir);
  for (const auto& r : run.series) std::cout << trainer::ToJson(r).dump() << "\n";
  if (run.failed) {
    std::cerr << "training failed: " << run.error << "\n";
    return 1;
  }
  std::cout << "final_return " << run.final_return << "\n";
  return 0;
}

int Experiment(const CommonFlags& flags) {
  const harness::ExperimentConfig config = LoadWithOverrides(flags);
  const harness::RunSummary summary = harness::RunExperiment(config, flags.threads);
  std::cout << harness::FormatReport(summary);
  for (const auto& r : summary.runs) {
    if (r.failed) return 1;
  }
  return 0;
}

int Verify(const CommonFlags& flags, size_t games) {
  oracle::VerifyOptions options;
  options.games = games;
  if (flags.seed) options.seed = *flags.seed;
  const oracle::VerifyReport report = oracle::RunVerifySuite(options);
  std::cout << oracle::FormatReport(report);
  if (flags.out) {
    fs::create_directories(*flags.out);
    std::ofstream(fs::path(*flags.out) / "verify.json") << oracle::ToJson(report).dump(2) << "\n";
  }
  return report.passed() ? 0 : 1;
}

int Report(const CommonFlags& flags) {
  if (!flags.out) throw std::invalid_argument("report needs --out DIR");
  const fs::path dir(*flags.out);
  const harness::RunSummary summary = harness::LoadRunSummary(dir);
  const std::string text = harness::FormatReport(summary);
  std::cout << text;
  std::ofstream(dir / "report.txt") << text;

  std::ostringstream recomputed;
  harness::WriteSummaryCsv(summary.variants, recomputed);
  std::ifstream stored(dir / "summary.csv");
  std::stringstream stored_text;
  stored_text << stored.rdbuf();
  if (stored && stored_text.str() != recomputed.str()) {
    std::cerr << "warning: summary.csv differs from the statistics recomputed from "
                 "the run files\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent credit assignment trainer and verification tools"};
  app.require_subcommand(1);
  CommonFlags flags;
  size_t games = 20;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* opt = cmd->add_option("--config", flags.config, "Experiment config (JSON)");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", flags.seed, "Seed override");
    cmd->add_option("--variant", flags.variant,
                    "Variant override: Full, Jnt, Ind, Cor, NoJnt, NoInd, NoCor");
    cmd->add_option("--out", flags.out, "Output directory");
    cmd->add_option("--threads", flags.threads, "Concurrent runs")->check(CLI::PositiveNumber);
  };
  auto* train = app.add_subcommand("train", "Single training run");
  add_common(train, true);
  auto* experiment = app.add_subcommand("experiment", "Variant x seed matrix");
  add_common(experiment, true);
  auto* verify = app.add_subcommand("verify", "Exact oracle suite");
  add_common(verify, false);
  verify->add_option("--games", games, "Random games per check")->check(CLI::PositiveNumber);
  auto* report = app.add_subcommand("report", "Summaries and t-tests from a run directory");
  add_common(report, false);

  CLI11_PARSE(app, argc, argv);
  try {
    if (train->parsed()) return Train(flags);
    if (experiment->parsed()) return Experiment(flags);
    if (verify->parsed()) return Verify(flags, games);
    if (report->parsed()) return Report(flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
