#include "maca/harness/experiment.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "maca/envs/env_json.h"
#include "maca/harness/stats.h"

namespace maca::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr size_t kMaxAttentionStates = 64;

std::string Num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void WriteFile(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << contents;
}

json ReadJsonFile(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

}  // namespace

void ExperimentConfig::Validate() const {
  if (seeds.empty()) throw std::invalid_argument("experiment: seed list is empty");
  if (variants.empty()) throw std::invalid_argument("experiment: variant list is empty");
  if (eval_interval == 0) throw std::invalid_argument("experiment: eval_interval must be > 0");
  if (eval_episodes == 0) throw std::invalid_argument("experiment: eval_episodes must be > 0");
  if (out_dir.empty()) throw std::invalid_argument("experiment: out_dir is empty");
  train.Validate();
}

trainer::TrainConfig ExperimentConfig::RunConfig(advantage::Variant variant,
                                                 uint64_t seed) const {
  trainer::TrainConfig c = train;
  c.variant = variant;
  c.seed = seed;
  c.eval_interval = eval_interval;
  c.eval_episodes = eval_episodes;
  if (c.use_gae && variant != advantage::Variant::kJnt) c.use_gae = false;
  c.Validate();
  return c;
}

ExperimentConfig ExperimentConfigFromJson(const json& j) {
  static const std::vector<std::string> kKeys = {
      "env", "train", "variants", "seeds", "eval_interval", "eval_episodes",
      "out_dir", "emit_attention", "welch"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      throw std::invalid_argument("experiment: unknown key '" + key + "'");
    }
  }
  ExperimentConfig c;
  try {
    c.env = j.at("env");
    if (j.contains("train")) c.train = trainer::TrainConfigFromJson(j.at("train"));
    if (j.contains("variants")) {
      c.variants.clear();
      for (const auto& v : j.at("variants")) {
        c.variants.push_back(advantage::ParseVariant(v.get<std::string>()));
      }
    }
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<uint64_t>>();
    c.eval_interval = j.value("eval_interval", c.eval_interval);
    c.eval_episodes = j.value("eval_episodes", c.eval_episodes);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.emit_attention = j.value("emit_attention", c.emit_attention);
    c.welch = j.value("welch", c.welch);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("experiment: ") + e.what());
  }
  c.Validate();
  envs::FromJson(c.env);
  return c;
}

json ToJson(const ExperimentConfig& c) {
  json variants = json::array();
  for (advantage::Variant v : c.variants) variants.push_back(advantage::VariantName(v));
  return {{"env", c.env},
          {"train", trainer::ToJson(c.train)},
          {"variants", variants},
          {"seeds", c.seeds},
          {"eval_interval", c.eval_interval},
          {"eval_episodes", c.eval_episodes},
          {"out_dir", c.out_dir},
          {"emit_attention", c.emit_attention},
          {"welch", c.welch}};
}

ExperimentConfig LoadExperimentConfig(const fs::path& path) {
  return ExperimentConfigFromJson(ReadJsonFile(path));
}

std::string RunFileStem(const std::string& variant, uint64_t seed) {
  return variant + "_seed" + std::to_string(seed);
}

SeedRun RunSingle(const ExperimentConfig& config, advantage::Variant variant,
                  uint64_t seed, const fs::path& out_dir) {
  SeedRun run;
  run.variant = advantage::VariantName(variant);
  run.seed = seed;
  const std::string stem = RunFileStem(run.variant, seed);
  fs::create_directories(out_dir / "runs");
  std::ofstream metrics(out_dir / "runs" / (stem + ".jsonl"), std::ios::binary);
  if (!metrics) throw std::runtime_error("cannot write metrics for " + stem);
  try {
    const envs::DecPomdp env = envs::FromJson(config.env);
    trainer::Trainer tr(env, config.RunConfig(variant, seed));
    const trainer::TrainResult result = tr.Run([&](const trainer::MetricRecord& r) {
      metrics << trainer::ToJson(r).dump() << '\n';
      metrics.flush();
      run.series.push_back(r);
    });
    run.final_return = result.final_return;
    run.best_return = result.best_return;
    if (config.emit_attention) {
      auto states = tr.Evaluate(config.eval_episodes, tr.config().eval_seed).visited_states;
      if (states.size() > kMaxAttentionStates) states.resize(kMaxAttentionStates);
      fs::create_directories(out_dir / "attention");
      std::ofstream att(out_dir / "attention" / (stem + ".csv"), std::ios::binary);
      EmitAttention(tr.Attention(states), result.env_steps, att);
    }
  } catch (const std::exception& e) {
    run.failed = true;
    run.error = e.what();
    json failure = {{"variant", run.variant}, {"seed", seed}, {"error", run.error}};
    if (const auto* diverged = dynamic_cast<const trainer::TrainingDiverged*>(&e)) {
      failure["state"] = json::parse(diverged->dump());
    }
    fs::create_directories(out_dir / "failures");
    WriteFile(out_dir / "failures" / (stem + ".json"), failure.dump(2) + "\n");
    std::cerr << "run " << stem << " failed: " << run.error << "\n";
  }
  if (!run.series.empty()) {
    run.best_return = run.series.front().return_mean;
    for (const auto& r : run.series) run.best_return = std::max(run.best_return, r.return_mean);
    if (!run.failed) run.final_return = run.series.back().return_mean;
  }
  return run;
}

std::vector<VariantSummary> SummarizeRuns(const std::vector<SeedRun>& runs,
                                          const std::vector<std::string>& order,
                                          bool welch) {
  std::vector<VariantSummary> out;
  for (const std::string& name : order) {
    VariantSummary v;
    v.variant = name;
    std::vector<double> bests;
    for (const SeedRun& r : runs) {
      if (r.variant != name) continue;
      ++v.runs;
      if (r.failed) {
        ++v.failed;
        continue;
      }
      v.finals.push_back(r.final_return);
      bests.push_back(r.best_return);
    }
    v.mean_final = Mean(v.finals);
    v.std_final = StdDev(v.finals);
    v.mean_best = Mean(bests);
    out.push_back(std::move(v));
  }
  std::vector<VariantSamples> samples;
  for (const VariantSummary& v : out) samples.push_back({v.variant, v.finals});
  const std::vector<bool> mask = BoldMask(samples, welch);
  size_t best = 0;
  for (size_t k = 1; k < out.size(); ++k) {
    if (out[k].mean_final > out[best].mean_final) best = k;
  }
  for (size_t k = 0; k < out.size(); ++k) {
    out[k].bold = mask[k];
    if (k != best && out[k].finals.size() >= 2 && out[best].finals.size() >= 2) {
      out[k].p_vs_best = TTest(out[best].finals, out[k].finals, welch).p;
    }
  }
  return out;
}

void WriteSummaryCsv(const std::vector<VariantSummary>& variants, std::ostream& out) {
  out << "variant,runs,failed,mean_final_return,std_final_return,mean_best_return,"
         "p_vs_best,bold\n";
  for (const VariantSummary& v : variants) {
    out << v.variant << ',' << v.runs << ',' << v.failed << ',' << Num(v.mean_final)
        << ',' << Num(v.std_final) << ',' << Num(v.mean_best) << ','
        << Num(v.p_vs_best) << ',' << (v.bold ? 1 : 0) << '\n';
  }
}

void WriteSeedsCsv(const std::vector<SeedRun>& runs, std::ostream& out) {
  out << "variant,seed,status,final_return,best_return,evaluations\n";
  for (const SeedRun& r : runs) {
    out << r.variant << ',' << r.seed << ',' << (r.failed ? "failed" : "ok") << ','
        << Num(r.final_return) << ',' << Num(r.best_return) << ',' << r.series.size()
        << '\n';
  }
}

RunSummary RunExperiment(const ExperimentConfig& config, size_t threads) {
  config.Validate();
  const fs::path out_dir(config.out_dir);
  fs::create_directories(out_dir);
  WriteFile(out_dir / "config.json", ToJson(config).dump(2) + "\n");

  struct Job {
    advantage::Variant variant;
    uint64_t seed;
  };
  std::vector<Job> jobs;
  for (advantage::Variant v : config.variants) {
    for (uint64_t s : config.seeds) jobs.push_back({v, s});
  }
  RunSummary summary;
  summary.runs.resize(jobs.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t k = next++; k < jobs.size(); k = next++) {
      summary.runs[k] = RunSingle(config, jobs[k].variant, jobs[k].seed, out_dir);
    }
  };
  threads = std::max<size_t>(1, std::min(threads, jobs.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  std::vector<std::string> order;
  for (advantage::Variant v : config.variants) order.push_back(advantage::VariantName(v));
  summary.variants = SummarizeRuns(summary.runs, order, config.welch);
  std::ostringstream seeds, table;
  WriteSeedsCsv(summary.runs, seeds);
  WriteSummaryCsv(summary.variants, table);
  WriteFile(out_dir / "seeds.csv", seeds.str());
  WriteFile(out_dir / "summary.csv", table.str());
  return summary;
}

RunSummary LoadRunSummary(const fs::path& out_dir) {
  const ExperimentConfig config = ExperimentConfigFromJson(ReadJsonFile(out_dir / "config.json"));
  RunSummary summary;
  std::vector<std::string> order;
  for (advantage::Variant v : config.variants) {
    const std::string name = advantage::VariantName(v);
    order.push_back(name);
    for (uint64_t seed : config.seeds) {
      SeedRun run;
      run.variant = name;
      run.seed = seed;
      const std::string stem = RunFileStem(name, seed);
      std::ifstream in(out_dir / "runs" / (stem + ".jsonl"));
      if (!in) throw std::invalid_argument("missing metrics for run " + stem);
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        run.series.push_back(trainer::MetricRecordFromJson(json::parse(line)));
      }
      run.failed = fs::exists(out_dir / "failures" / (stem + ".json"));
      if (run.failed) {
        run.error = ReadJsonFile(out_dir / "failures" / (stem + ".json")).value("error", "");
      }
      if (!run.series.empty()) {
        run.final_return = run.failed ? 0.0 : run.series.back().return_mean;
        run.best_return = run.series.front().return_mean;
        for (const auto& r : run.series) {
          run.best_return = std::max(run.best_return, r.return_mean);
        }
      }
      summary.runs.push_back(std::move(run));
    }
  }
  summary.variants = SummarizeRuns(summary.runs, order, config.welch);
  return summary;
}

std::string FormatReport(const RunSummary& summary) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-8s %5s %7s %12s %12s %10s %5s\n", "variant",
                "runs", "failed", "mean_final", "std_final", "p_vs_best", "bold");
  out << line;
  for (const VariantSummary& v : summary.variants) {
    std::snprintf(line, sizeof(line), "%-8s %5zu %7zu %12.6g %12.6g %10.4g %5s\n",
                  v.variant.c_str(), v.runs, v.failed, v.mean_final, v.std_final,
                  v.p_vs_best, v.bold ? "*" : "");
    out << line;
  }
  return out.str();
}

void EmitAttention(const std::vector<trainer::AttentionSnapshot>& snapshots,
                   size_t step, std::ostream& out) {
  size_t n = snapshots.empty() ? 0 : snapshots.front().rollout.rows();
  out << "step,state,agent";
  for (size_t j = 0; j < n; ++j) out << ",a" << j;
  out << ",corrset\n";
  for (const trainer::AttentionSnapshot& snap : snapshots) {
    for (size_t i = 0; i < snap.rollout.rows(); ++i) {
      out << step << ',' << snap.state << ',' << i;
      for (size_t j = 0; j < snap.rollout.cols(); ++j) out << ',' << Num(snap.rollout(i, j));
      out << ',';
      const auto& members = snap.corrsets.at(i);
      for (size_t k = 0; k < members.size(); ++k) out << (k ? ";" : "") << members[k];
      out << '\n';
    }
  }
}

}  // namespace maca::harness
