#include "maca/oracle/oracle.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "maca/numerics/random.h"
#include "maca/numerics/tensor.h"

namespace maca::oracle {

namespace {

void CheckRow(std::span<const double> row) {
  double total = 0.0;
  for (double p : row) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument("policy row has an invalid entry");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("policy row does not sum to 1");
  }
}

bool InGroup(const std::vector<size_t>& group, size_t agent) {
  return std::find(group.begin(), group.end(), agent) != group.end();
}

void CheckGroup(const LocalGame& game, std::span<const size_t> taken,
                const std::vector<size_t>& group) {
  const size_t n = game.n_agents();
  if (game.policies.size() != n || taken.size() != n) {
    throw std::invalid_argument("local game: one policy row and action per agent");
  }
  if (group.empty()) throw std::invalid_argument("marginalized group is empty");
  for (size_t j : group) {
    if (j >= n) throw std::invalid_argument("marginalized group names an unknown agent");
  }
}

// Calls fn(joint, weight) for every a_G with a_{-G} fixed to `taken`.
template <typename Fn>
void ForEachGroupAction(const LocalGame& game, std::span<const size_t> taken,
                        const std::vector<size_t>& group, Fn&& fn) {
  CheckGroup(game, taken, group);
  const envs::JointActionSpace space(game.action_counts);
  if (game.q.size() != space.size()) {
    throw std::invalid_argument("local game: Q has the wrong number of entries");
  }
  std::vector<bool> in_group(game.n_agents(), false);
  for (size_t j : group) in_group[j] = true;
  for (size_t index = 0; index < space.size(); ++index) {
    const envs::JointAction joint = space.At(index);
    double weight = 1.0;
    bool match = true;
    for (size_t j = 0; j < joint.size() && match; ++j) {
      if (in_group[j]) {
        weight *= game.policies[j][joint[j]];
      } else {
        match = joint[j] == taken[j];
      }
    }
    if (match) fn(joint, game.q[index], weight);
  }
}

void RequirePositive(std::span<const double> row) {
  for (double p : row) {
    if (!(p > 0.0)) {
      throw std::domain_error("policy has a zero-probability action; the score is undefined");
    }
  }
}

}  // namespace

TabularPolicy::TabularPolicy(std::vector<size_t> action_counts, size_t num_states,
                             std::vector<envs::PolicyRows> rows)
    : counts_(std::move(action_counts)), rows_(std::move(rows)) {
  if (rows_.size() != num_states) {
    throw std::invalid_argument("TabularPolicy: one row set per state expected");
  }
  for (const auto& state_rows : rows_) {
    if (state_rows.size() != counts_.size()) {
      throw std::invalid_argument("TabularPolicy: one row per agent expected");
    }
    for (size_t i = 0; i < counts_.size(); ++i) {
      if (state_rows[i].size() != counts_[i]) {
        throw std::invalid_argument("TabularPolicy: row width mismatch");
      }
      CheckRow(state_rows[i]);
    }
  }
}

TabularPolicy TabularPolicy::FromLogits(
    std::vector<size_t> action_counts,
    const std::vector<std::vector<std::vector<double>>>& logits) {
  std::vector<envs::PolicyRows> rows;
  rows.reserve(logits.size());
  for (const auto& state_logits : logits) {
    envs::PolicyRows r;
    for (const auto& l : state_logits) r.push_back(Softmax(l));
    rows.push_back(std::move(r));
  }
  const size_t num_states = rows.size();
  return TabularPolicy(std::move(action_counts), num_states, std::move(rows));
}

TabularPolicy TabularPolicy::RandomSoftmax(const envs::DecPomdp& env, uint64_t seed,
                                           double scale) {
  Rng rng(seed);
  std::vector<std::vector<std::vector<double>>> logits(env.num_states());
  for (auto& state_logits : logits) {
    for (size_t i = 0; i < env.n_agents(); ++i) {
      std::vector<double> l(env.num_actions(i));
      for (double& x : l) x = scale * rng.Normal();
      state_logits.push_back(std::move(l));
    }
  }
  return FromLogits(env.action_counts(), logits);
}

TabularPolicy TabularPolicy::Uniform(const envs::DecPomdp& env) {
  envs::PolicyRows r;
  for (size_t i = 0; i < env.n_agents(); ++i) {
    r.emplace_back(env.num_actions(i), 1.0 / static_cast<double>(env.num_actions(i)));
  }
  return TabularPolicy(env.action_counts(), env.num_states(),
                       std::vector<envs::PolicyRows>(env.num_states(), r));
}

double TabularPolicy::JointProbability(size_t state,
                                       std::span<const size_t> joint) const {
  const envs::PolicyRows& r = rows_.at(state);
  double p = 1.0;
  for (size_t i = 0; i < joint.size(); ++i) p *= r[i].at(joint[i]);
  return p;
}

bool TabularPolicy::StrictlyPositive() const {
  for (const auto& state_rows : rows_) {
    for (const auto& row : state_rows) {
      for (double p : row) {
        if (!(p > 0.0)) return false;
      }
    }
  }
  return true;
}

namespace {

void CheckCompatible(const envs::DecPomdp& env, const TabularPolicy& policy) {
  if (policy.num_states() != env.num_states() ||
      policy.action_counts() != env.action_counts()) {
    throw std::invalid_argument("policy does not match the environment");
  }
}

// Joint-action probabilities per state.
std::vector<std::vector<double>> JointProbabilities(const envs::DecPomdp& env,
                                                    const TabularPolicy& policy) {
  std::vector<std::vector<double>> out(env.num_states());
  for (size_t s = 0; s < env.num_states(); ++s) {
    out[s].resize(env.num_joint_actions());
    for (size_t j = 0; j < env.num_joint_actions(); ++j) {
      out[s][j] = policy.JointProbability(s, env.JointFromIndex(j));
    }
  }
  return out;
}

bool Continues(const envs::DecPomdp& env, size_t t, size_t next_state) {
  return t + 1 < env.horizon() && !env.terminal(next_state);
}

}  // namespace

ExactQTable ExactQ(const envs::DecPomdp& env, const TabularPolicy& policy,
                   size_t cap) {
  envs::Enumerate(env, cap);
  CheckCompatible(env, policy);
  const size_t H = env.horizon();
  const size_t S = env.num_states();
  const size_t J = env.num_joint_actions();
  ExactQTable table;
  table.horizon = H;
  table.gamma = env.gamma();
  table.num_states = S;
  table.num_joint = J;
  table.action_counts = env.action_counts();
  table.q.assign(H * S * J, 0.0);
  table.v.assign(H * S, 0.0);
  const auto probs = JointProbabilities(env, policy);
  for (size_t t = H; t-- > 0;) {
    for (size_t s = 0; s < S; ++s) {
      double v = 0.0;
      for (size_t j = 0; j < J; ++j) {
        double q = 0.0;
        for (const envs::Transition& tr : env.Transitions(s, j)) {
          double target = tr.reward;
          if (Continues(env, t, tr.next_state)) {
            target += env.gamma() * table.V(t + 1, tr.next_state);
          }
          q += tr.probability * target;
        }
        table.q[(t * S + s) * J + j] = q;
        v += probs[s][j] * q;
      }
      table.v[t * S + s] = v;
    }
  }
  return table;
}

double BellmanResidual(const envs::DecPomdp& env, const TabularPolicy& policy,
                       const ExactQTable& table) {
  const auto probs = JointProbabilities(env, policy);
  double worst = 0.0;
  for (size_t t = 0; t < table.horizon; ++t) {
    for (size_t s = 0; s < table.num_states; ++s) {
      double v = 0.0;
      for (size_t j = 0; j < table.num_joint; ++j) {
        double expected = 0.0;
        for (const envs::Transition& tr : env.Transitions(s, j)) {
          const double next =
              Continues(env, t, tr.next_state) ? table.V(t + 1, tr.next_state) : 0.0;
          expected += tr.probability * (tr.reward + table.gamma * next);
        }
        worst = std::max(worst, std::abs(table.Q(t, s, j) - expected));
        v += probs[s][j] * table.Q(t, s, j);
      }
      worst = std::max(worst, std::abs(table.V(t, s) - v));
    }
  }
  return worst;
}

std::vector<double> StateDistribution::Marginal() const {
  std::vector<double> out(num_states, 0.0);
  for (size_t t = 0; t < horizon; ++t) {
    for (size_t s = 0; s < num_states; ++s) out[s] += At(t, s);
  }
  return out;
}

StateDistribution VisitationDistribution(const envs::DecPomdp& env,
                                         const TabularPolicy& policy) {
  CheckCompatible(env, policy);
  const size_t H = env.horizon();
  const size_t S = env.num_states();
  const auto probs = JointProbabilities(env, policy);
  StateDistribution d;
  d.horizon = H;
  d.num_states = S;
  d.weights.assign(H * S, 0.0);
  std::copy(env.initial_distribution().begin(), env.initial_distribution().end(),
            d.weights.begin());
  for (size_t t = 0; t + 1 < H; ++t) {
    for (size_t s = 0; s < S; ++s) {
      const double mass = d.weights[t * S + s];
      if (mass == 0.0) continue;
      for (size_t j = 0; j < env.num_joint_actions(); ++j) {
        for (const envs::Transition& tr : env.Transitions(s, j)) {
          if (!Continues(env, t, tr.next_state)) continue;
          d.weights[(t + 1) * S + tr.next_state] += mass * probs[s][j] * tr.probability;
        }
      }
    }
  }
  double total = 0.0;
  for (double w : d.weights) total += w;
  for (double& w : d.weights) w /= total;
  return d;
}

double OptimalValue(const envs::DecPomdp& env, double discount) {
  const size_t S = env.num_states();
  std::vector<double> next(S, 0.0), current(S, 0.0);
  for (size_t t = env.horizon(); t-- > 0;) {
    for (size_t s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (size_t j = 0; j < env.num_joint_actions(); ++j) {
        double q = 0.0;
        for (const envs::Transition& tr : env.Transitions(s, j)) {
          const double cont = Continues(env, t, tr.next_state) ? next[tr.next_state] : 0.0;
          q += tr.probability * (tr.reward + discount * cont);
        }
        best = std::max(best, q);
      }
      current[s] = best;
    }
    std::swap(next, current);
  }
  double value = 0.0;
  for (size_t s = 0; s < S; ++s) value += env.initial_distribution()[s] * next[s];
  return value;
}

LocalGame LocalAt(const ExactQTable& table, const TabularPolicy& policy, size_t t,
                  size_t state) {
  LocalGame game;
  game.action_counts = table.action_counts;
  game.policies = policy.Rows(state);
  const auto row = table.Row(t, state);
  game.q.assign(row.begin(), row.end());
  return game;
}

double ExactBaseline(const LocalGame& game, std::span<const size_t> taken,
                     const std::vector<size_t>& group) {
  double total = 0.0;
  ForEachGroupAction(game, taken, group,
                     [&](const envs::JointAction&, double q, double w) { total += w * q; });
  return total;
}

double ScoreNormSquared(std::span<const double> row, size_t action) {
  double total = 0.0;
  for (size_t k = 0; k < row.size(); ++k) {
    const double g = (k == action ? 1.0 : 0.0) - row[k];
    total += g * g;
  }
  return total;
}

namespace {

struct Moments {
  double q = 0.0;    // E[Q]
  double g = 0.0;    // E[||score||^2]
  double qg = 0.0;   // E[Q ||score||^2]
};

Moments ScoreMoments(const LocalGame& game, std::span<const size_t> taken,
                     const std::vector<size_t>& group, size_t agent) {
  CheckGroup(game, taken, group);
  if (!InGroup(group, agent)) {
    throw std::invalid_argument("the agent must belong to the marginalized group");
  }
  for (size_t j : group) RequirePositive(game.policies[j]);
  Moments m;
  ForEachGroupAction(game, taken, group,
                     [&](const envs::JointAction& joint, double q, double w) {
                       const double g = ScoreNormSquared(game.policies[agent], joint[agent]);
                       m.q += w * q;
                       m.g += w * g;
                       m.qg += w * q * g;
                     });
  if (!(m.g > 0.0)) {
    throw std::domain_error("minimum-variance baseline: every score is zero");
  }
  return m;
}

}  // namespace

double MinVarianceBaseline(const LocalGame& game, std::span<const size_t> taken,
                           const std::vector<size_t>& group, size_t agent) {
  const Moments m = ScoreMoments(game, taken, group, agent);
  return m.qg / m.g;
}

double CovarianceIdentityResidual(const LocalGame& game,
                                  std::span<const size_t> taken,
                                  const std::vector<size_t>& group, size_t agent) {
  const Moments m = ScoreMoments(game, taken, group, agent);
  const double b_star = m.qg / m.g;
  const double cov = m.qg - m.q * m.g;
  const double exact = ExactBaseline(game, taken, group);
  return std::abs(exact - (b_star - cov / m.g));
}

double ConditionalEstimatorVariance(const LocalGame& game,
                                    std::span<const size_t> taken,
                                    const std::vector<size_t>& group, size_t agent,
                                    double baseline) {
  CheckGroup(game, taken, group);
  if (!InGroup(group, agent)) {
    throw std::invalid_argument("the agent must belong to the marginalized group");
  }
  RequirePositive(game.policies[agent]);
  const auto& row = game.policies[agent];
  std::vector<double> mean(row.size(), 0.0);
  double second = 0.0;
  ForEachGroupAction(game, taken, group,
                     [&](const envs::JointAction& joint, double q, double w) {
                       const double c = q - baseline;
                       for (size_t k = 0; k < row.size(); ++k) {
                         const double x = c * ((k == joint[agent] ? 1.0 : 0.0) - row[k]);
                         mean[k] += w * x;
                         second += w * x * x;
                       }
                     });
  double mean_sq = 0.0;
  for (double m : mean) mean_sq += m * m;
  return second - mean_sq;
}

namespace {

// Accumulates E[x] and E[||x||^2] for x = c * score_i over (t, s, a).
struct ScoreAccumulator {
  std::vector<double> mean;
  double second = 0.0;
};

template <typename CoefFn>
ScoreAccumulator AccumulateScores(const envs::DecPomdp& env,
                                  const TabularPolicy& policy,
                                  const ExactQTable& table, size_t agent,
                                  CoefFn&& coef) {
  if (!policy.StrictlyPositive()) {
    throw std::domain_error("policy has a zero-probability action; the score is undefined");
  }
  const StateDistribution d = VisitationDistribution(env, policy);
  const size_t A = env.num_actions(agent);
  ScoreAccumulator acc;
  acc.mean.assign(env.num_states() * A, 0.0);
  for (size_t t = 0; t < table.horizon; ++t) {
    for (size_t s = 0; s < env.num_states(); ++s) {
      const double ds = d.At(t, s);
      if (ds == 0.0) continue;
      const auto& row = policy.Row(s, agent);
      for (size_t j = 0; j < env.num_joint_actions(); ++j) {
        const envs::JointAction joint = env.JointFromIndex(j);
        const double w = ds * policy.JointProbability(s, joint);
        const double c = coef(t, s, j, joint);
        for (size_t k = 0; k < A; ++k) {
          const double x = c * ((k == joint[agent] ? 1.0 : 0.0) - row[k]);
          acc.mean[s * A + k] += w * x;
          acc.second += w * x * x;
        }
      }
    }
  }
  return acc;
}

}  // namespace

std::vector<double> CheckUnbiasedness(const envs::DecPomdp& env,
                                      const TabularPolicy& policy,
                                      const ExactQTable& table,
                                      const BaselineFn& baseline) {
  std::vector<double> out;
  for (size_t i = 0; i < env.n_agents(); ++i) {
    const ScoreAccumulator acc = AccumulateScores(
        env, policy, table, i,
        [&](size_t t, size_t s, size_t, const envs::JointAction& joint) {
          return baseline(i, t, s, joint);
        });
    double norm = 0.0;
    for (double m : acc.mean) norm += m * m;
    out.push_back(std::sqrt(norm));
  }
  return out;
}

double EstimatorVariance(const envs::DecPomdp& env, const TabularPolicy& policy,
                         const ExactQTable& table, const BaselineFn& baseline,
                         size_t agent) {
  const ScoreAccumulator acc = AccumulateScores(
      env, policy, table, agent,
      [&](size_t t, size_t s, size_t j, const envs::JointAction& joint) {
        return table.Q(t, s, j) - baseline(agent, t, s, joint);
      });
  double mean_sq = 0.0;
  for (double m : acc.mean) mean_sq += m * m;
  return acc.second - mean_sq;
}

BaselineFn ZeroBaseline() {
  return [](size_t, size_t, size_t, const envs::JointAction&) { return 0.0; };
}

BaselineFn ActionValueBaseline(const ExactQTable& table) {
  return [&table](size_t, size_t t, size_t s, const envs::JointAction& joint) {
    return table.Q(t, s, envs::JointActionSpace(table.action_counts).Index(joint));
  };
}

BaselineFn GroupBaseline(const ExactQTable& table, const TabularPolicy& policy,
                         std::function<std::vector<size_t>(size_t agent)> group) {
  return [&table, &policy, group = std::move(group)](
             size_t agent, size_t t, size_t s, const envs::JointAction& joint) {
    return ExactBaseline(LocalAt(table, policy, t, s), joint, group(agent));
  };
}

BaselineFn MinVarianceBaselineFn(const ExactQTable& table,
                                 const TabularPolicy& policy,
                                 std::function<std::vector<size_t>(size_t agent)> group) {
  return [&table, &policy, group = std::move(group)](
             size_t agent, size_t t, size_t s, const envs::JointAction& joint) {
    return MinVarianceBaseline(LocalAt(table, policy, t, s), joint, group(agent), agent);
  };
}

}  // namespace maca::oracle
