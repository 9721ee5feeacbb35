#ifndef MACA_TRAINER_ROLLOUT_H_
#define MACA_TRAINER_ROLLOUT_H_

#include <functional>

#include "maca/envs/dec_pomdp.h"
#include "maca/envs/trajectory.h"
#include "maca/numerics/random.h"

namespace maca::trainer {

// Maps the agents' observations to one categorical row per agent.
using PolicyFn =
    std::function<envs::PolicyRows(const envs::Observations& observations)>;

// Steps an environment continuously across batches; episodes that do not fit
// in one batch resume in the next.
class RolloutCollector {
 public:
  RolloutCollector(const envs::DecPomdp& env, uint64_t seed);

  // Records `length` transitions. The stored policy rows are exactly the
  // distributions the actions were sampled from.
  envs::TrajectoryBatch Collect(const PolicyFn& policy, size_t length);

  size_t steps_taken() const { return steps_taken_; }
  size_t episodes_finished() const { return episodes_finished_; }

 private:
  const envs::DecPomdp& env_;
  Rng rng_;
  envs::EpisodeState state_;
  size_t steps_taken_ = 0;
  size_t episodes_finished_ = 0;
};

// Fresh-episode collection from a caller-owned generator.
envs::TrajectoryBatch CollectRollouts(const envs::DecPomdp& env,
                                      const PolicyFn& policy, size_t length,
                                      Rng& rng);

struct EvalResult {
  double return_mean = 0.0;
  double return_std = 0.0;
  std::vector<double> returns;
  std::vector<size_t> visited_states;  // sorted, unique
};

// Undiscounted returns of `episodes` stochastic episodes; episode k draws from
// Rng(seed + k) so that paired evaluations share randomness.
EvalResult EvaluatePolicy(const envs::DecPomdp& env, const PolicyFn& policy,
                          size_t episodes, uint64_t seed);

}  // namespace maca::trainer

#endif  // MACA_TRAINER_ROLLOUT_H_
