#ifndef MACA_ENVS_TRAJECTORY_H_
#define MACA_ENVS_TRAJECTORY_H_

#include <vector>

#include "maca/envs/dec_pomdp.h"

namespace maca::envs {

using PolicyRows = std::vector<std::vector<double>>;
using Observations = std::vector<std::vector<double>>;

// One environment transition with the sampling-time policy of every agent.
struct StepRecord {
  size_t state = 0;
  size_t t = 0;
  Observations observations;
  JointAction actions;
  PolicyRows policies;
  double reward = 0.0;
  bool done = false;
  size_t next_state = 0;
  Observations next_observations;
};

// Consecutive steps, possibly spanning several episodes. When the last step
// is not terminal, `bootstrap_*` hold the action and policy rows sampled at
// its successor so that one-step Q targets can be formed.
struct TrajectoryBatch {
  std::vector<StepRecord> steps;
  JointAction bootstrap_actions;
  PolicyRows bootstrap_policies;

  size_t size() const { return steps.size(); }
  bool empty() const { return steps.empty(); }

  // Action / policy at the successor of step k (meaningless when done).
  const JointAction& NextActions(size_t k) const;
  const PolicyRows& NextPolicies(size_t k) const;

  // Throws std::invalid_argument if records disagree in agent count or a
  // policy row is missing or not a probability vector.
  void Validate(size_t n_agents) const;
};

}  // namespace maca::envs

#endif  // MACA_ENVS_TRAJECTORY_H_
