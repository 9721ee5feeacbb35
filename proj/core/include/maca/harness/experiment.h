#ifndef MACA_HARNESS_EXPERIMENT_H_
#define MACA_HARNESS_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "maca/advantage/advantage.h"
#include "maca/trainer/config.h"
#include "maca/trainer/trainer.h"

namespace maca::harness {

// JSON schema:
//   {"env": {...environment description...},
//    "train": {...TrainConfig keys...},
//    "variants": ["Full", "Jnt", ...],
//    "seeds": [1, 2, ...],
//    "eval_interval": 2000, "eval_episodes": 32,
//    "out_dir": "runs/example", "emit_attention": true, "welch": false}
struct ExperimentConfig {
  nlohmann::json env;
  trainer::TrainConfig train;
  std::vector<advantage::Variant> variants = {advantage::Variant::kFull};
  std::vector<uint64_t> seeds = {1};
  size_t eval_interval = 2000;
  size_t eval_episodes = 32;
  std::string out_dir = "runs";
  bool emit_attention = true;
  bool welch = false;

  // Throws std::invalid_argument on an empty seed or variant list or a zero
  // cadence.
  void Validate() const;
  // TrainConfig for one (variant, seed) run.
  trainer::TrainConfig RunConfig(advantage::Variant variant, uint64_t seed) const;
};

ExperimentConfig ExperimentConfigFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const ExperimentConfig& config);
ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path);

struct SeedRun {
  std::string variant;
  uint64_t seed = 0;
  bool failed = false;
  std::string error;
  double final_return = 0.0;
  double best_return = 0.0;
  std::vector<trainer::MetricRecord> series;
};

struct VariantSummary {
  std::string variant;
  size_t runs = 0;
  size_t failed = 0;
  double mean_final = 0.0;
  double std_final = 0.0;
  double mean_best = 0.0;
  bool bold = false;
  double p_vs_best = 1.0;
  std::vector<double> finals;
};

struct RunSummary {
  std::vector<SeedRun> runs;
  std::vector<VariantSummary> variants;
};

// Per-variant statistics over the successful runs, plus the bold mask.
std::vector<VariantSummary> SummarizeRuns(const std::vector<SeedRun>& runs,
                                          const std::vector<std::string>& order,
                                          bool welch);

// Runs every (variant, seed) pair, `threads` at a time, and writes
//   <out>/config.json, <out>/runs/<variant>_seed<seed>.jsonl,
//   <out>/seeds.csv, <out>/summary.csv, <out>/attention/*.csv and
//   <out>/failures/*.json for aborted runs.
// Output files depend only on the configuration.
RunSummary RunExperiment(const ExperimentConfig& config, size_t threads = 1);

// Single run; writes its JSONL series (and attention file) under `out_dir`.
SeedRun RunSingle(const ExperimentConfig& config, advantage::Variant variant,
                  uint64_t seed, const std::filesystem::path& out_dir);

// Rebuilds the summary from <out>/config.json and the per-run JSONL files.
RunSummary LoadRunSummary(const std::filesystem::path& out_dir);

std::string RunFileStem(const std::string& variant, uint64_t seed);

void WriteSummaryCsv(const std::vector<VariantSummary>& variants, std::ostream& out);
void WriteSeedsCsv(const std::vector<SeedRun>& runs, std::ostream& out);
// Summary table with p-values against the best variant and the bold mask.
std::string FormatReport(const RunSummary& summary);

// One row per (state, agent): the rollout row and the agent's correlated set
// (members separated by ';').
void EmitAttention(const std::vector<trainer::AttentionSnapshot>& snapshots,
                   size_t step, std::ostream& out);

}  // namespace maca::harness

#endif  // MACA_HARNESS_EXPERIMENT_H_
