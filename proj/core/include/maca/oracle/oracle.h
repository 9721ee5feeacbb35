#ifndef MACA_ORACLE_ORACLE_H_
#define MACA_ORACLE_ORACLE_H_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "maca/envs/dec_pomdp.h"
#include "maca/envs/trajectory.h"

namespace maca::oracle {

// Stochastic per-state policy: one categorical row per (state, agent). The
// tabular parameters of agent i at state s are the logits of row (s, i).
class TabularPolicy {
 public:
  TabularPolicy(std::vector<size_t> action_counts, size_t num_states,
                std::vector<envs::PolicyRows> rows);

  // Softmax over logits[s][i]; strictly positive for finite logits.
  static TabularPolicy FromLogits(std::vector<size_t> action_counts,
                                  const std::vector<std::vector<std::vector<double>>>& logits);
  // Logits drawn from `scale` times a standard normal.
  static TabularPolicy RandomSoftmax(const envs::DecPomdp& env, uint64_t seed,
                                     double scale = 1.0);
  static TabularPolicy Uniform(const envs::DecPomdp& env);

  const std::vector<double>& Row(size_t state, size_t agent) const {
    return rows_.at(state).at(agent);
  }
  const envs::PolicyRows& Rows(size_t state) const { return rows_.at(state); }
  double JointProbability(size_t state, std::span<const size_t> joint) const;
  bool StrictlyPositive() const;

  size_t num_states() const { return rows_.size(); }
  const std::vector<size_t>& action_counts() const { return counts_; }

 private:
  std::vector<size_t> counts_;
  std::vector<envs::PolicyRows> rows_;
};

// Finite-horizon action values Q_t(s, a) for t < horizon.
struct ExactQTable {
  size_t horizon = 0;
  double gamma = 1.0;
  size_t num_states = 0;
  size_t num_joint = 0;
  std::vector<size_t> action_counts;
  std::vector<double> q;  // [(t * num_states + s) * num_joint + j]
  std::vector<double> v;  // [t * num_states + s]

  double Q(size_t t, size_t state, size_t joint_index) const {
    return q[(t * num_states + state) * num_joint + joint_index];
  }
  double V(size_t t, size_t state) const { return v[t * num_states + state]; }
  // Q_t(s, .) over joint indices.
  std::span<const double> Row(size_t t, size_t state) const {
    return {q.data() + (t * num_states + state) * num_joint, num_joint};
  }
};

// Backward induction. Throws std::length_error when the state x joint-action
// space exceeds `cap`.
ExactQTable ExactQ(const envs::DecPomdp& env, const TabularPolicy& policy,
                   size_t cap = envs::kDefaultEnumerationCap);

// Largest |Q_t(s,a) - (E r + gamma E V_{t+1}(s'))| over the table.
double BellmanResidual(const envs::DecPomdp& env, const TabularPolicy& policy,
                       const ExactQTable& table);

// Normalized visitation weights over (t, s) under the policy.
struct StateDistribution {
  size_t horizon = 0;
  size_t num_states = 0;
  std::vector<double> weights;  // [t * num_states + s], sums to 1

  double At(size_t t, size_t state) const { return weights[t * num_states + state]; }
  // Weights summed over time.
  std::vector<double> Marginal() const;
};

StateDistribution VisitationDistribution(const envs::DecPomdp& env,
                                         const TabularPolicy& policy);

// Optimal expected return of the fully observed joint controller.
double OptimalValue(const envs::DecPomdp& env, double discount = 1.0);

// State-local view: the policy rows at one state and Q over every joint
// action there, indexed as in envs::JointActionSpace.
struct LocalGame {
  std::vector<size_t> action_counts;
  envs::PolicyRows policies;
  std::vector<double> q;

  size_t n_agents() const { return action_counts.size(); }
};

LocalGame LocalAt(const ExactQTable& table, const TabularPolicy& policy,
                  size_t t, size_t state);

// E over a_G ~ prod_{j in G} pi_j of Q(a_G, taken_{-G}).
double ExactBaseline(const LocalGame& game, std::span<const size_t> taken,
                     const std::vector<size_t>& group);

// Squared norm of the score of agent i's softmax policy at action a:
// ||e_a - pi_i||^2.
double ScoreNormSquared(std::span<const double> row, size_t action);

// b* = E[Q ||score_i||^2] / E[||score_i||^2] over a_G. Requires i in G and a
// strictly positive policy; throws std::domain_error when the denominator is 0.
double MinVarianceBaseline(const LocalGame& game, std::span<const size_t> taken,
                           const std::vector<size_t>& group, size_t agent);

// |ExactBaseline - (b* - Cov(Q, ||score||^2) / E[||score||^2])|.
double CovarianceIdentityResidual(const LocalGame& game,
                                  std::span<const size_t> taken,
                                  const std::vector<size_t>& group, size_t agent);

// Trace of Cov over a_G of (Q - b) score_i given taken_{-G}, for a baseline
// that does not depend on a_G.
double ConditionalEstimatorVariance(const LocalGame& game,
                                    std::span<const size_t> taken,
                                    const std::vector<size_t>& group, size_t agent,
                                    double baseline);

// Baseline for agent i at (t, s) and joint action a.
using BaselineFn = std::function<double(size_t agent, size_t t, size_t state,
                                        const envs::JointAction& joint)>;

// Per-agent || E_{(t,s) ~ d, a ~ pi}[ b_i score_i ] || with the score taken
// with respect to agent i's tabular logits. Throws std::domain_error for a
// policy with a zero entry.
std::vector<double> CheckUnbiasedness(const envs::DecPomdp& env,
                                      const TabularPolicy& policy,
                                      const ExactQTable& table,
                                      const BaselineFn& baseline);

// Trace of Cov over (t, s) ~ d and a ~ pi of (Q - b_i) score_i.
double EstimatorVariance(const envs::DecPomdp& env, const TabularPolicy& policy,
                         const ExactQTable& table, const BaselineFn& baseline,
                         size_t agent);

// Baselines built from the exact table. The returned functions keep
// references to `table` and `policy`.
BaselineFn ZeroBaseline();
BaselineFn ActionValueBaseline(const ExactQTable& table);
// Marginalizes the agents in group(agent) out of the exact Q.
BaselineFn GroupBaseline(const ExactQTable& table, const TabularPolicy& policy,
                         std::function<std::vector<size_t>(size_t agent)> group);
BaselineFn MinVarianceBaselineFn(const ExactQTable& table,
                                 const TabularPolicy& policy,
                                 std::function<std::vector<size_t>(size_t agent)> group);

}  // namespace maca::oracle

#endif  // MACA_ORACLE_ORACLE_H_
