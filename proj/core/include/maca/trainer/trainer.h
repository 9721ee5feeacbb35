#ifndef MACA_TRAINER_TRAINER_H_
#define MACA_TRAINER_TRAINER_H_

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "maca/advantage/advantage.h"
#include "maca/critic/critic.h"
#include "maca/envs/dec_pomdp.h"
#include "maca/numerics/optim.h"
#include "maca/trainer/actor.h"
#include "maca/trainer/cmaes.h"
#include "maca/trainer/config.h"
#include "maca/trainer/rollout.h"
#include "maca/trainer/updates.h"

namespace maca::trainer {

struct MetricRecord {
  size_t step = 0;
  double return_mean = 0.0;
  double return_std = 0.0;
  double loss_v = 0.0;
  double loss_q = 0.0;
  advantage::Psi psi_mean{0.0, 0.0, 0.0};
  double corrset_mean_size = 0.0;
  double advantage_mean = 0.0;
  double advantage_var = 0.0;
  double b_jnt_var = 0.0;
  double b_ind_var = 0.0;
  double b_cor_var = 0.0;
  double b_maca_var = 0.0;
  double policy_entropy = 0.0;
  double max_simplex_error = 0.0;
  size_t cma_generation = 0;
};

nlohmann::json ToJson(const MetricRecord& record);
MetricRecord MetricRecordFromJson(const nlohmann::json& j);

// Raised when a loss or parameter becomes non-finite; dump() holds a JSON
// snapshot of the trainer at the time of failure.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, std::string dump)
      : std::runtime_error(what), dump_(std::move(dump)) {}
  const std::string& dump() const { return dump_; }

 private:
  std::string dump_;
};

struct RoundStats {
  CriticDiagnostics critic;
  std::vector<ActorDiagnostics> actors;
  advantage::AdvantageSummary advantage;
};

struct TrainResult {
  std::vector<MetricRecord> metrics;
  double final_return = 0.0;
  double best_return = 0.0;
  // Largest deviation of any emitted weight vector from the simplex.
  double max_simplex_error = 0.0;
  size_t env_steps = 0;
  size_t cma_generations = 0;
  size_t cma_resets = 0;
};

struct AttentionSnapshot {
  size_t state = 0;
  Tensor rollout;
  std::vector<std::vector<size_t>> corrsets;
};

class Trainer {
 public:
  // `env` must outlive the trainer.
  Trainer(const envs::DecPomdp& env, TrainConfig config);

  using MetricCallback = std::function<void(const MetricRecord&)>;
  TrainResult Run(const MetricCallback& on_metric = {});

  // One collect / critic / advantage / actor cycle.
  RoundStats Round();
  EvalResult Evaluate(size_t episodes, uint64_t seed);
  std::vector<AttentionSnapshot> Attention(const std::vector<size_t>& states) const;

  PolicyFn policy();
  const TrainConfig& config() const { return config_; }
  critic::Critic& critic() { return critic_; }
  ActorSet& actors() { return actors_; }
  advantage::CoeffHead& coeff() { return coeff_; }
  size_t env_steps() const { return collector_.steps_taken(); }
  double sigma() const;

 private:
  std::string StateDump(const std::string& reason, const RoundStats* stats) const;

  const envs::DecPomdp& env_;
  TrainConfig config_;
  ActorSet actors_;
  critic::Critic critic_;
  advantage::CoeffHead coeff_;
  std::vector<Adam> actor_opts_;
  Adam critic_opt_;
  RolloutCollector collector_;
  uint64_t cma_seed_;
  double max_simplex_error_ = 0.0;
};

}  // namespace maca::trainer

#endif  // MACA_TRAINER_TRAINER_H_
