#include "maca/envs/trajectory.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace maca::envs {

const JointAction& TrajectoryBatch::NextActions(size_t k) const {
  return k + 1 < steps.size() ? steps[k + 1].actions : bootstrap_actions;
}

const PolicyRows& TrajectoryBatch::NextPolicies(size_t k) const {
  return k + 1 < steps.size() ? steps[k + 1].policies : bootstrap_policies;
}

void TrajectoryBatch::Validate(size_t n_agents) const {
  for (size_t k = 0; k < steps.size(); ++k) {
    const StepRecord& s = steps[k];
    const std::string where = "trajectory step " + std::to_string(k) + ": ";
    if (s.observations.size() != n_agents || s.actions.size() != n_agents ||
        s.next_observations.size() != n_agents) {
      throw std::invalid_argument(where + "agent count mismatch");
    }
    if (s.policies.size() != n_agents) {
      throw std::invalid_argument(where + "missing stored policy rows");
    }
    for (size_t i = 0; i < n_agents; ++i) {
      double total = 0.0;
      for (double p : s.policies[i]) {
        if (!(p >= 0.0)) throw std::invalid_argument(where + "negative probability");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-9 || s.actions[i] >= s.policies[i].size()) {
        throw std::invalid_argument(where + "invalid policy row for agent " +
                                    std::to_string(i));
      }
    }
  }
  if (!steps.empty() && !steps.back().done &&
      (bootstrap_actions.size() != n_agents ||
       bootstrap_policies.size() != n_agents)) {
    throw std::invalid_argument("trajectory: missing bootstrap action/policy");
  }
}

}  // namespace maca::envs
