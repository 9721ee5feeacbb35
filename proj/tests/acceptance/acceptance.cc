// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "maca/advantage/advantage.h"
#include "maca/critic/critic.h"
#include "maca/envs/env_json.h"
#include "maca/envs/games.h"
#include "maca/harness/experiment.h"
#include "maca/harness/stats.h"
#include "maca/numerics/grad_check.h"
#include "maca/numerics/random.h"
#include "maca/oracle/oracle.h"
#include "maca/oracle/verify.h"
#include "maca/trainer/actor.h"
#include "maca/trainer/cmaes.h"
#include "maca/trainer/rollout.h"
#include "maca/trainer/trainer.h"
#include "maca/trainer/updates.h"

#ifndef MACA_CONFIG_DIR
#define MACA_CONFIG_DIR "configs"
#endif

namespace maca {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool passed = false;
  std::string detail;
};

class Stopwatch {
 public:
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string Format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

std::string Describe(const std::vector<oracle::VerifyCheck>& checks) {
  std::string out;
  for (const auto& c : checks) {
    out += Format("%s%s=%.3e(%s%.0e)", out.empty() ? "" : " ", c.name.c_str(), c.value,
                  c.upper ? "<=" : ">", c.bound);
  }
  return out;
}

bool AllPassed(const std::vector<oracle::VerifyCheck>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

Outcome OracleCriterion(
    const std::function<std::vector<oracle::VerifyCheck>(const oracle::VerifyOptions&)>& run,
    size_t min_instances, double time_limit) {
  const oracle::VerifyOptions options{20, 100, 1};
  const Stopwatch watch;
  const auto checks = run(options);
  const double seconds = watch.Seconds();
  bool ok = AllPassed(checks) && seconds < time_limit;
  for (const auto& c : checks) ok = ok && c.instances >= min_instances;
  return {ok, Describe(checks) + Format(" time=%.2fs", seconds)};
}

// Encoder and both value heads through the critic loss; the actor surrogate
// on perturbed parameters so that some ratios clip.
Outcome GradientCriterion() {
  double worst = 0.0;
  std::string where;
  auto track = [&](const GradCheckResult& r, const char* what) {
    if (r.max_relative_error >= worst) {
      worst = r.max_relative_error;
      where = std::string(what) + ":" + r.worst_parameter;
    }
  };
  for (uint64_t seed = 0; seed < 5; ++seed) {
    const envs::DecPomdp env =
        envs::MakeRandomGame({2, 3, 2}, seed, {3, 3, 0.9, 2, false});
    critic::CriticConfig cc;
    cc.obs_dim = env.obs_dim();
    cc.action_counts = env.action_counts();
    cc.width = 8;
    cc.zs_dim = 6;
    cc.num_blocks = 2;
    critic::Critic critic(cc, seed);
    Rng rng(seed + 100);
    for (Parameter* p : critic.q_head().Parameters()) {
      for (double& w : p->value.data()) w = rng.Normal();
    }
    const trainer::PolicyFn uniform = [&](const envs::Observations&) {
      envs::PolicyRows rows;
      for (size_t k : env.action_counts()) rows.emplace_back(k, 1.0 / static_cast<double>(k));
      return rows;
    };
    trainer::RolloutCollector collector(env, seed);
    const auto batch = collector.Collect(uniform, 6);
    const trainer::CriticBatch cb = trainer::MakeCriticBatch(batch, critic, 0.9);
    track(GradCheck([&](Tape& t) { return trainer::CriticLoss(t, critic, cb, 1.0, 0.0).total; },
                    critic.Parameters()),
          "value_head");
    track(GradCheck([&](Tape& t) { return trainer::CriticLoss(t, critic, cb, 0.0, 1.0).total; },
                    critic.Parameters()),
          "q_head");
    track(GradCheck([&](Tape& t) { return trainer::CriticLoss(t, critic, cb, 1.0, 0.5).total; },
                    critic.EncoderParameters()),
          "encoder");

    trainer::ActorSet actors(env, {8, 8}, seed);
    const auto actor_batch = collector.Collect(
        [&](const envs::Observations& o) { return actors.Policies(o); }, 8);
    std::vector<double> adv(actor_batch.size() * env.n_agents());
    for (double& a : adv) a = rng.Normal();
    for (size_t i = 0; i < env.n_agents(); ++i) {
      for (Parameter* p : actors[i].Parameters()) {
        for (double& w : p->value.data()) w += 0.05 * rng.Normal();
      }
      const trainer::ActorBatch ab = trainer::MakeActorBatch(actor_batch, i, adv);
      track(GradCheck(
                [&](Tape& t) { return trainer::ActorSurrogateLoss(t, actors[i], ab, 0.1, 0.01); },
                actors[i].Parameters()),
            "actor");
    }
  }
  return {worst <= 1e-4, Format("max_rel_err=%.3e (<=1e-4, step 1e-5, central) worst=%s", worst,
                                where.c_str())};
}

struct LearningRuns {
  double max_simplex_error = 0.0;
  size_t runs = 0;
};

Outcome LearningCriterion(const fs::path& work_dir, LearningRuns* runs_out) {
  const Stopwatch watch;
  harness::ExperimentConfig config =
      harness::LoadExperimentConfig(fs::path(MACA_CONFIG_DIR) / "subset_game.json");
  config.variants = {advantage::Variant::kFull, advantage::Variant::kJnt,
                     advantage::Variant::kInd, advantage::Variant::kCor};
  config.seeds = {1, 2, 3, 4, 5};
  config.out_dir = (work_dir / "learning").string();
  config.emit_attention = false;
  fs::remove_all(config.out_dir);
  const size_t budget = 200000;
  if (config.train.total_steps > budget) {
    return {false, Format("config total_steps %zu exceeds the %zu budget",
                          config.train.total_steps, budget)};
  }
  const envs::DecPomdp env = envs::FromJson(config.env);
  const double optimum = oracle::OptimalValue(env);
  const harness::RunSummary summary = harness::RunExperiment(config, 1);

  size_t reached = 0;
  std::vector<double> full_finals;
  for (const harness::SeedRun& run : summary.runs) {
    runs_out->runs += 1;
    for (const auto& m : run.series) {
      runs_out->max_simplex_error = std::max(runs_out->max_simplex_error, m.max_simplex_error);
    }
    if (run.variant != "Full" || run.failed) continue;
    full_finals.push_back(run.final_return);
    const bool hit = std::any_of(run.series.begin(), run.series.end(), [&](const auto& m) {
      return m.step <= budget && m.return_mean >= 0.95 * optimum;
    });
    reached += hit ? 1 : 0;
  }
  // Best single-baseline ablation by mean final return.
  const harness::VariantSummary* best = nullptr;
  const harness::VariantSummary* full = nullptr;
  for (const auto& v : summary.variants) {
    if (v.variant == "Full") full = &v;
    if ((v.variant == "Jnt" || v.variant == "Ind" || v.variant == "Cor") &&
        (best == nullptr || v.mean_final > best->mean_final)) {
      best = &v;
    }
  }
  if (full == nullptr || best == nullptr || full->finals.size() < 2 ||
      best->finals.size() < 2) {
    return {false, "missing runs"};
  }
  const harness::TTestResult tt = harness::TTest(full->finals, best->finals, config.welch);
  const bool worse = tt.significant && full->mean_final < best->mean_final;
  const double seconds = watch.Seconds();
  const bool ok = reached >= 4 && !worse && seconds < 1800.0;
  return {ok, Format("optimum=%.3f reached95=%zu/5 full=%.3f+-%.3f best_single=%s %.3f+-%.3f "
                     "t=%.3f p=%.4f time=%.0fs",
                     optimum, reached, full->mean_final, full->std_final, best->variant.c_str(),
                     best->mean_final, best->std_final, tt.t, tt.p, seconds)};
}

Outcome CorrSetCriterion() {
  size_t violations = 0, checks = 0;
  for (size_t n = 2; n <= 6; ++n) {
    critic::CriticConfig cc;
    cc.obs_dim = 4;
    cc.action_counts.assign(n, 2);
    cc.width = 8;
    cc.zs_dim = 6;
    cc.num_blocks = 2;
    const critic::Critic critic(cc, n);
    Rng rng(n);
    for (int trial = 0; trial < 40; ++trial) {
      std::vector<std::vector<double>> obs(n, std::vector<double>(4));
      for (auto& o : obs) {
        for (double& x : o) x = 2.0 * rng.Normal();
      }
      const auto rollout = critic::ComputeAttentionRollout(critic.Encode(obs).attention);
      for (size_t i = 0; i < n; ++i) {
        std::vector<size_t> previous;
        for (int step = 0; step <= 50; ++step) {
          const auto members = advantage::ComputeCorrSet(rollout, i, step / 50.0).members;
          ++checks;
          if (!std::binary_search(members.begin(), members.end(), i)) ++violations;
          if (step > 0 && !std::includes(previous.begin(), previous.end(), members.begin(),
                                         members.end())) {
            ++violations;
          }
          previous = members;
        }
      }
    }
    const envs::DecPomdp env = envs::MakeRandomGame(std::vector<size_t>(n, 2), n);
    trainer::TrainConfig tc;
    tc.actor_hidden = {4};
    tc.critic_width = 4;
    tc.critic_zs_dim = 4;
    const trainer::Trainer trainer(env, tc);
    ++checks;
    if (trainer.sigma() != 1.0 / static_cast<double>(n) ||
        advantage::DefaultSigma(n) != 1.0 / static_cast<double>(n)) {
      ++violations;
    }
  }
  return {violations == 0,
          Format("self-membership, monotone shrinkage, default sigma=1.0/n: %zu violations "
                 "in %zu checks",
                 violations, checks)};
}

Outcome CmaCriterion(const LearningRuns& runs) {
  trainer::CmaEs es(std::vector<double>(6, 1.0), 0.5, 0, 1);
  size_t generations = 0;
  double norm = 0.0;
  for (; generations < 200; ++generations) {
    es.Step([](std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s += v * v;
      return s;
    });
    norm = 0.0;
    for (double m : es.mean()) norm += m * m;
    norm = std::sqrt(norm);
    if (norm <= 1e-6) {
      ++generations;
      break;
    }
  }
  const bool ok = norm <= 1e-6 && runs.runs > 0 && runs.max_simplex_error <= 1e-12;
  return {ok, Format("sphere6 |mean|=%.3e after %zu generations (<=1e-6 within 200); "
                     "max psi simplex error=%.3e over %zu training runs (<=1e-12)",
                     norm, generations, runs.max_simplex_error, runs.runs)};
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Compares every file under two trees; returns the number of mismatches.
size_t CompareTrees(const fs::path& a, const fs::path& b, size_t* files) {
  size_t mismatches = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    ++*files;
    const fs::path other = b / fs::relative(entry.path(), a);
    if (!fs::exists(other) || ReadFile(entry.path()) != ReadFile(other)) ++mismatches;
  }
  for (const auto& entry : fs::recursive_directory_iterator(b)) {
    if (entry.is_regular_file() && !fs::exists(a / fs::relative(entry.path(), b))) {
      ++mismatches;
    }
  }
  return mismatches;
}

Outcome DeterminismCriterion(const fs::path& work_dir, const std::string& cli) {
  const fs::path root = work_dir / "determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  harness::ExperimentConfig config =
      harness::LoadExperimentConfig(fs::path(MACA_CONFIG_DIR) / "subset_game.json");
  config.variants = {advantage::Variant::kFull, advantage::Variant::kJnt};
  config.seeds = {1, 2};
  config.train.total_steps = 2000;
  config.eval_interval = 1000;
  config.eval_episodes = 8;
  const fs::path out = root / "out";
  config.out_dir = out.string();
  const fs::path config_path = root / "config.json";
  std::ofstream(config_path) << harness::ToJson(config).dump(2) << "\n";

  auto invoke = [&]() -> bool {
    if (cli.empty()) {
      harness::RunExperiment(config, 1);
      return true;
    }
    const std::string cmd = "\"" + cli + "\" experiment --config \"" + config_path.string() +
                            "\" --out \"" + out.string() + "\" --threads 1 > \"" +
                            (root / "cli.log").string() + "\" 2>&1";
    return std::system(cmd.c_str()) == 0;
  };
  if (!invoke()) return {false, "first invocation failed"};
  fs::rename(out, root / "first");
  if (!invoke()) return {false, "second invocation failed"};
  size_t files = 0;
  const size_t mismatches = CompareTrees(root / "first", out, &files);
  const bool ok = mismatches == 0 && files > 0 && fs::exists(out / "summary.csv");
  return {ok, Format("%s: %zu files compared, %zu differ", cli.empty() ? "in-process" : "cli",
                     files, mismatches)};
}

}  // namespace
}  // namespace maca

int main(int argc, char** argv) {
  using namespace maca;
  CLI::App app{"Acceptance criteria"};
  std::string work_dir = "acceptance_runs";
  std::string cli;
  app.add_option("--work-dir", work_dir, "Scratch directory for training runs");
  app.add_option("--cli", cli, "Path of the maca executable (empty: run in-process)");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work_dir);

  int failures = 0;
  auto report = [&](int id, const char* name, const Outcome& o) {
    std::cout << (o.passed ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << o.detail
              << std::endl;
    failures += o.passed ? 0 : 1;
  };
  auto guarded = [](const std::function<Outcome()>& f) {
    try {
      return f();
    } catch (const std::exception& e) {
      return Outcome{false, std::string("exception: ") + e.what()};
    }
  };

  report(1, "unbiasedness",
         guarded([] { return OracleCriterion(oracle::VerifyUnbiasedness, 20, 5.0); }));
  report(2, "minimum-variance baseline",
         guarded([] { return OracleCriterion(oracle::VerifyMinimumVariance, 20, 5.0); }));
  report(3, "covariance identity",
         guarded([] { return OracleCriterion(oracle::VerifyCovarianceIdentity, 20, 1e9); }));
  report(4, "linear head expectation",
         guarded([] { return OracleCriterion(oracle::VerifyJensen, 100, 1e9); }));
  report(5, "gradient correctness", guarded(GradientCriterion));
  report(6, "reduction identities",
         guarded([] { return OracleCriterion(oracle::VerifyReductions, 20, 1e9); }));
  LearningRuns runs;
  report(7, "desk-scale learning",
         guarded([&] { return LearningCriterion(work_dir, &runs); }));
  report(8, "correlated-set properties", guarded(CorrSetCriterion));
  report(9, "coefficient search", guarded([&] { return CmaCriterion(runs); }));
  report(10, "determinism", guarded([&] { return DeterminismCriterion(work_dir, cli); }));

  std::cout << (failures == 0 ? "ALL PASS" : Format("%d FAILED", failures)) << std::endl;
  return failures == 0 ? 0 : 1;
}
