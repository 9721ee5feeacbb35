#include "maca/oracle/verify.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "maca/advantage/advantage.h"
#include "maca/critic/critic.h"
#include "maca/envs/games.h"
#include "maca/numerics/random.h"
#include "maca/numerics/tensor.h"
#include "maca/oracle/oracle.h"
#include "maca/trainer/rollout.h"

namespace maca::oracle {

namespace {

VerifyCheck Upper(std::string name, double value, double bound, size_t instances) {
  return {std::move(name), value, bound, true, instances, value <= bound};
}

VerifyCheck Lower(std::string name, double value, double bound, size_t instances) {
  return {std::move(name), value, bound, false, instances, value > bound};
}

// Seeded one-step game k: alternately 2 and 3 agents, 2 or 3 actions each.
struct OracleGame {
  envs::DecPomdp env;
  TabularPolicy policy;
  ExactQTable table;
  // A random correlated set per agent, always containing the agent.
  std::vector<std::vector<size_t>> corrsets;
  advantage::Psi psi;
};

std::vector<size_t> RandomGroup(size_t n, size_t agent, Rng& rng) {
  std::vector<size_t> g;
  for (size_t j = 0; j < n; ++j) {
    if (j == agent || rng.Uniform() < 0.5) g.push_back(j);
  }
  return g;
}

advantage::Psi RandomSimplexPoint(Rng& rng) {
  advantage::Psi psi;
  double total = 0.0;
  for (double& w : psi) total += (w = -std::log(1.0 - rng.Uniform()));
  for (double& w : psi) w /= total;
  return psi;
}

OracleGame MakeOracleGame(uint64_t seed, size_t k, size_t horizon = 1,
                          size_t num_states = 1) {
  Rng rng(seed * 1000003ull + k);
  const size_t n = 2 + k % 2;
  std::vector<size_t> counts(n);
  for (size_t& c : counts) c = 2 + rng.Index(2);
  envs::RandomGameOptions opts;
  opts.horizon = horizon;
  opts.num_states = num_states;
  envs::DecPomdp env = envs::MakeRandomGame(counts, rng.NextU64(), opts);
  TabularPolicy policy = TabularPolicy::RandomSoftmax(env, rng.NextU64());
  ExactQTable table = ExactQ(env, policy);
  std::vector<std::vector<size_t>> corrsets;
  for (size_t i = 0; i < n; ++i) corrsets.push_back(RandomGroup(n, i, rng));
  const advantage::Psi psi = RandomSimplexPoint(rng);
  return {std::move(env), std::move(policy), std::move(table), std::move(corrsets), psi};
}

std::vector<size_t> Everyone(size_t n) {
  std::vector<size_t> g(n);
  for (size_t i = 0; i < n; ++i) g[i] = i;
  return g;
}

double MaxOf(const std::vector<double>& v) {
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

std::vector<double> RandomPolicyRow(size_t actions, Rng& rng) {
  std::vector<double> logits(actions);
  for (double& l : logits) l = rng.Normal();
  return Softmax(logits);
}

critic::Critic RandomCritic(size_t obs_dim, std::vector<size_t> counts, Rng& rng) {
  critic::CriticConfig config;
  config.obs_dim = obs_dim;
  config.action_counts = std::move(counts);
  config.width = 8;
  config.zs_dim = 6;
  critic::Critic c(config, rng.NextU64());
  for (double& w : c.q_head().weight().value.data()) w = rng.Normal();
  c.q_head().bias().value[0] = rng.Normal();
  return c;
}

}  // namespace

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const VerifyCheck& c) { return c.passed; });
}

std::vector<VerifyCheck> VerifyUnbiasedness(const VerifyOptions& options) {
  double jnt = 0.0, ind = 0.0, cor = 0.0, maca = 0.0, zero = 0.0, control = 0.0;
  for (size_t k = 0; k < options.games; ++k) {
    const OracleGame g = MakeOracleGame(options.seed, k);
    const size_t n = g.env.n_agents();
    const auto all = Everyone(n);
    const BaselineFn b_jnt = GroupBaseline(g.table, g.policy, [&](size_t) { return all; });
    const BaselineFn b_ind = GroupBaseline(
        g.table, g.policy, [](size_t i) { return std::vector<size_t>{i}; });
    const BaselineFn b_cor =
        GroupBaseline(g.table, g.policy, [&](size_t i) { return g.corrsets[i]; });
    const BaselineFn b_maca = [&](size_t i, size_t t, size_t s,
                                  const envs::JointAction& a) {
      return advantage::MacaBaseline(b_jnt(i, t, s, a), b_ind(i, t, s, a),
                                     b_cor(i, t, s, a), g.psi);
    };
    auto worst = [&](const BaselineFn& b) {
      return MaxOf(CheckUnbiasedness(g.env, g.policy, g.table, b));
    };
    jnt = std::max(jnt, worst(b_jnt));
    ind = std::max(ind, worst(b_ind));
    cor = std::max(cor, worst(b_cor));
    maca = std::max(maca, worst(b_maca));
    zero = std::max(zero, worst(ZeroBaseline()));
    control = std::max(control, worst(ActionValueBaseline(g.table)));
  }
  const size_t m = options.games;
  return {Upper("unbiased.jnt", jnt, 1e-8, m),
          Upper("unbiased.ind", ind, 1e-8, m),
          Upper("unbiased.cor", cor, 1e-8, m),
          Upper("unbiased.maca", maca, 1e-8, m),
          Upper("unbiased.zero", zero, 1e-12, m),
          Lower("biased.action_value_control", control, 1e-3, m)};
}

std::vector<VerifyCheck> VerifyMinimumVariance(const VerifyOptions& options) {
  double worst = -std::numeric_limits<double>::infinity();
  size_t instances = 0;
  for (size_t k = 0; k < options.games; ++k) {
    const OracleGame g = MakeOracleGame(options.seed, k);
    const size_t n = g.env.n_agents();
    Rng rng(options.seed * 7919ull + k);
    for (size_t i = 0; i < n; ++i) {
      const std::vector<std::vector<size_t>> groups = {{i}, Everyone(n), g.corrsets[i]};
      for (const auto& group : groups) {
        auto fixed = [group](size_t) { return group; };
        const double v_star = EstimatorVariance(
            g.env, g.policy, g.table, MinVarianceBaselineFn(g.table, g.policy, fixed), i);
        std::vector<BaselineFn> others = {ZeroBaseline(),
                                          GroupBaseline(g.table, g.policy, fixed)};
        for (int c = 0; c < 3; ++c) {
          const double constant = rng.Uniform(-2.0, 2.0);
          others.push_back([constant](size_t, size_t, size_t, const envs::JointAction&) {
            return constant;
          });
        }
        for (const BaselineFn& b : others) {
          worst = std::max(worst,
                           v_star - EstimatorVariance(g.env, g.policy, g.table, b, i));
          ++instances;
        }
      }
    }
  }
  return {Upper("min_variance.var_star_minus_var", worst, 1e-12, instances)};
}

std::vector<VerifyCheck> VerifyCovarianceIdentity(const VerifyOptions& options) {
  double worst = 0.0;
  size_t instances = 0;
  for (size_t k = 0; k < options.games; ++k) {
    const OracleGame g = MakeOracleGame(options.seed, k, 2, 2);
    const size_t n = g.env.n_agents();
    const envs::JointActionSpace space(g.env.action_counts());
    for (size_t t = 0; t < g.table.horizon; ++t) {
      for (size_t s = 0; s < g.env.num_states(); ++s) {
        const LocalGame local = LocalAt(g.table, g.policy, t, s);
        for (size_t i = 0; i < n; ++i) {
          const std::vector<std::vector<size_t>> groups = {{i}, Everyone(n), g.corrsets[i]};
          for (const auto& group : groups) {
            for (const envs::JointAction& taken : space) {
              worst = std::max(worst, CovarianceIdentityResidual(local, taken, group, i));
              ++instances;
            }
          }
        }
      }
    }
  }
  return {Upper("covariance_identity.residual", worst, 1e-10, instances)};
}

std::vector<VerifyCheck> VerifyJensen(const VerifyOptions& options) {
  Rng rng(options.seed * 31337ull + 5);
  double worst = 0.0;
  for (size_t trial = 0; trial < options.jensen_trials; ++trial) {
    const size_t n = 2 + rng.Index(3);
    std::vector<size_t> counts(n);
    for (size_t& c : counts) c = 2 + rng.Index(3);
    const critic::Critic c = RandomCritic(3, counts, rng);
    std::vector<double> z(c.config().zs_dim);
    for (double& x : z) x = rng.Normal();
    envs::PolicyRows policies;
    envs::JointAction taken;
    for (size_t a : counts) {
      policies.push_back(RandomPolicyRow(a, rng));
      taken.push_back(rng.Index(a));
    }
    std::vector<size_t> group = RandomGroup(n, rng.Index(n), rng);
    const double mixed = c.QValue(z, critic::MarginalizedDist(policies, taken, group));
    double expected = 0.0;
    for (const envs::JointAction& a : envs::JointActionSpace(counts)) {
      double w = 1.0;
      bool match = true;
      for (size_t j = 0; j < n; ++j) {
        const bool in_group = std::find(group.begin(), group.end(), j) != group.end();
        if (in_group) {
          w *= policies[j][a[j]];
        } else if (a[j] != taken[j]) {
          match = false;
        }
      }
      if (match) expected += w * c.QValue(z, critic::OneHotDist(a, counts));
    }
    worst = std::max(worst, std::abs(expected - mixed));
  }
  return {Upper("jensen.linear_head", worst, 1e-10, options.jensen_trials)};
}

std::vector<VerifyCheck> VerifyReductions(const VerifyOptions& options) {
  double jnt_row = 0.0, ind_row = 0.0, ind_sum = 0.0, cor_all = 0.0, cor_self = 0.0;
  size_t instances = 0;
  for (size_t k = 0; k < options.games; ++k) {
    Rng rng(options.seed * 104729ull + k);
    const size_t n = 2 + k % 3;
    std::vector<size_t> counts(n);
    for (size_t& c : counts) c = 2 + rng.Index(2);
    envs::RandomGameOptions opts;
    opts.num_states = 3;
    opts.horizon = 3;
    const envs::DecPomdp env = envs::MakeRandomGame(counts, rng.NextU64(), opts);
    const critic::Critic c = RandomCritic(env.obs_dim(), counts, rng);
    Rng policy_rng(rng.NextU64());
    const trainer::PolicyFn random_policy = [&](const envs::Observations&) {
      envs::PolicyRows rows;
      for (size_t a : counts) rows.push_back(RandomPolicyRow(a, policy_rng));
      return rows;
    };
    Rng collect_rng(rng.NextU64());
    const envs::TrajectoryBatch batch =
        trainer::CollectRollouts(env, random_policy, 6, collect_rng);
    advantage::CoeffHead coeff(c.config().zs_dim, false);

    const auto jnt = advantage::ComputeMacaAdvantage(batch, c, coeff,
                                                     {-1.0, advantage::Variant::kJnt});
    const auto ind = advantage::ComputeMacaAdvantage(batch, c, coeff,
                                                     {-1.0, advantage::Variant::kInd});
    const auto all = advantage::ComputeMacaAdvantage(batch, c, coeff,
                                                     {0.0, advantage::Variant::kCor});
    const auto self = advantage::ComputeMacaAdvantage(batch, c, coeff,
                                                      {1.0, advantage::Variant::kCor});
    for (size_t t = 0; t < batch.size(); ++t) {
      const envs::StepRecord& step = batch.steps[t];
      const auto enc = c.Encode(step.observations);
      const auto& z = enc.embedding.pooled;
      const double q = c.QValue(z, critic::OneHotDist(step.actions, counts));
      const double v = c.VValue(z, step.policies);
      for (size_t i = 0; i < n; ++i) {
        const size_t r = t * n + i;
        ++instances;
        // Actor-critic row: Q(s, a) - V(s).
        jnt_row = std::max(jnt_row, std::abs(jnt.records[r].advantage - (q - v)));
        // Counterfactual row: Q(s, a) - E_{a_i} Q(s, (a_i, a_-i)).
        const double counterfactual = c.QValue(
            z, critic::MarginalizedDist(step.policies, step.actions, {i}));
        ind_row = std::max(ind_row,
                           std::abs(ind.records[r].advantage - (q - counterfactual)));
        double summed = 0.0;
        envs::JointAction a = step.actions;
        for (size_t ai = 0; ai < counts[i]; ++ai) {
          a[i] = ai;
          summed += step.policies[i][ai] * c.QValue(z, critic::OneHotDist(a, counts));
        }
        ind_sum = std::max(ind_sum, std::abs(ind.records[r].advantage - (q - summed)));
        cor_all = std::max(cor_all, std::abs(all.records[r].b_cor - all.records[r].b_jnt));
        if (all.records[r].corrset_size != n) cor_all = std::max(cor_all, 1.0);
        const double b_self = advantage::KLevelBaseline(c, z, step.policies,
                                                        step.actions, {i}, i);
        cor_self = std::max(cor_self, std::abs(self.records[r].b_cor - self.records[r].b_ind));
        cor_self = std::max(cor_self, std::abs(b_self - self.records[r].b_ind));
      }
    }
  }
  return {Upper("reduction.jnt_actor_critic_row", jnt_row, 0.0, instances),
          Upper("reduction.ind_counterfactual_row", ind_row, 0.0, instances),
          Upper("reduction.ind_counterfactual_sum", ind_sum, 1e-12, instances),
          Upper("reduction.cor_all_agents_is_jnt", cor_all, 0.0, instances),
          Upper("reduction.cor_self_is_ind", cor_self, 0.0, instances)};
}

std::vector<VerifyCheck> VerifyBellman(const VerifyOptions& options) {
  double worst = 0.0;
  for (size_t k = 0; k < options.games; ++k) {
    const OracleGame g = MakeOracleGame(options.seed, k, 4, 3);
    worst = std::max(worst, BellmanResidual(g.env, g.policy, g.table));
  }
  return {Upper("exact_q.bellman_residual", worst, 1e-10, options.games)};
}

VerifyReport RunVerifySuite(const VerifyOptions& options) {
  VerifyReport report;
  for (auto* fn : {&VerifyUnbiasedness, &VerifyMinimumVariance,
                   &VerifyCovarianceIdentity, &VerifyJensen, &VerifyReductions,
                   &VerifyBellman}) {
    auto checks = fn(options);
    report.checks.insert(report.checks.end(), checks.begin(), checks.end());
  }
  return report;
}

nlohmann::json ToJson(const VerifyReport& report) {
  nlohmann::json checks = nlohmann::json::array();
  for (const VerifyCheck& c : report.checks) {
    checks.push_back({{"name", c.name},
                      {"value", c.value},
                      {"bound", c.bound},
                      {"kind", c.upper ? "upper" : "lower"},
                      {"instances", c.instances},
                      {"passed", c.passed}});
  }
  return {{"passed", report.passed()}, {"checks", checks}};
}

std::string FormatReport(const VerifyReport& report) {
  std::ostringstream out;
  for (const VerifyCheck& c : report.checks) {
    char line[256];
    std::snprintf(line, sizeof(line), "%s %-40s %.3e %s %.1e (%zu instances)\n",
                  c.passed ? "PASS" : "FAIL", c.name.c_str(), c.value,
                  c.upper ? "<=" : ">", c.bound, c.instances);
    out << line;
  }
  return out.str();
}

}  // namespace maca::oracle
