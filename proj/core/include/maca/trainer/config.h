#ifndef MACA_TRAINER_CONFIG_H_
#define MACA_TRAINER_CONFIG_H_

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "maca/advantage/advantage.h"

namespace maca::trainer {

// Defaults are standard clipped-PPO settings; network sizes and schedule
// lengths are desk-scale knobs.
struct TrainConfig {
  double gamma = 0.99;
  double actor_lr = 5e-4;
  double critic_lr = 5e-4;
  size_t ppo_epochs = 10;
  double clip_param = 0.1;
  double entropy_coef = 0.01;
  double v_loss_coef = 1.0;
  double q_loss_coef = 0.5;
  double max_grad_norm = 10.0;
  double adam_eps = 1e-5;
  double critic_beta2 = 0.95;
  double critic_weight_decay = 0.01;
  bool normalize_advantage = true;
  // GAE(lambda) over V; only valid with the Jnt variant.
  bool use_gae = false;
  double gae_lambda = 0.95;

  size_t rollout_length = 200;
  size_t total_steps = 20000;
  uint64_t seed = 1;
  double sigma = -1.0;  // negative selects 1/n
  advantage::Variant variant = advantage::Variant::kFull;
  bool shared_psi = false;

  std::vector<size_t> actor_hidden = {64, 64, 64};
  size_t critic_width = 64;
  size_t critic_zs_dim = 256;
  size_t critic_blocks = 1;

  // Coefficient search: one candidate drives `cmaes_windows` update rounds.
  size_t cmaes_population = 8;
  size_t cmaes_windows = 5;
  double cmaes_step = 0.1;

  size_t eval_interval = 2000;
  size_t eval_episodes = 32;
  uint64_t eval_seed = 7919;

  // Throws std::invalid_argument on a violated invariant.
  void Validate() const;
};

nlohmann::json ToJson(const TrainConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig TrainConfigFromJson(const nlohmann::json& j);

}  // namespace maca::trainer

#endif  // MACA_TRAINER_CONFIG_H_
