#include "maca/trainer/config.h"

#include <stdexcept>
#include <string>

namespace maca::trainer {

using nlohmann::json;

void TrainConfig::Validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("TrainConfig: ") + what);
  };
  require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0, 1]");
  require(clip_param > 0.0, "clip_param must be positive");
  require(ppo_epochs >= 1, "ppo_epochs must be >= 1");
  require(actor_lr > 0.0 && critic_lr > 0.0, "learning rates must be positive");
  require(rollout_length >= 1, "rollout_length must be >= 1");
  require(sigma <= 1.0, "sigma must be <= 1 (negative selects 1/n)");
  require(!use_gae || variant == advantage::Variant::kJnt,
          "GAE is only available for the Jnt variant");
  require(cmaes_population >= 4, "cmaes_population must be >= 4");
  require(cmaes_windows >= 1, "cmaes_windows must be >= 1");
  require(cmaes_step > 0.0, "cmaes_step must be positive");
  require(eval_interval > 0, "eval_interval must be positive");
  require(eval_episodes > 0, "eval_episodes must be positive");
  require(critic_width > 0 && critic_zs_dim > 0, "critic sizes must be positive");
}

json ToJson(const TrainConfig& c) {
  return {
      {"gamma", c.gamma},
      {"actor_lr", c.actor_lr},
      {"critic_lr", c.critic_lr},
      {"ppo_epochs", c.ppo_epochs},
      {"clip_param", c.clip_param},
      {"entropy_coef", c.entropy_coef},
      {"v_loss_coef", c.v_loss_coef},
      {"q_loss_coef", c.q_loss_coef},
      {"max_grad_norm", c.max_grad_norm},
      {"adam_eps", c.adam_eps},
      {"critic_beta2", c.critic_beta2},
      {"critic_weight_decay", c.critic_weight_decay},
      {"normalize_advantage", c.normalize_advantage},
      {"use_gae", c.use_gae},
      {"gae_lambda", c.gae_lambda},
      {"rollout_length", c.rollout_length},
      {"total_steps", c.total_steps},
      {"seed", c.seed},
      {"sigma", c.sigma},
      {"variant", advantage::VariantName(c.variant)},
      {"shared_psi", c.shared_psi},
      {"actor_hidden", c.actor_hidden},
      {"critic_width", c.critic_width},
      {"critic_zs_dim", c.critic_zs_dim},
      {"critic_blocks", c.critic_blocks},
      {"cmaes_population", c.cmaes_population},
      {"cmaes_windows", c.cmaes_windows},
      {"cmaes_step", c.cmaes_step},
      {"eval_interval", c.eval_interval},
      {"eval_episodes", c.eval_episodes},
      {"eval_seed", c.eval_seed},
  };
}

TrainConfig TrainConfigFromJson(const json& j) {
  TrainConfig c;
  const json defaults = ToJson(c);
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) {
      throw std::invalid_argument("TrainConfig: unknown key '" + key + "'");
    }
  }
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("gamma", c.gamma);
    get("actor_lr", c.actor_lr);
    get("critic_lr", c.critic_lr);
    get("ppo_epochs", c.ppo_epochs);
    get("clip_param", c.clip_param);
    get("entropy_coef", c.entropy_coef);
    get("v_loss_coef", c.v_loss_coef);
    get("q_loss_coef", c.q_loss_coef);
    get("max_grad_norm", c.max_grad_norm);
    get("adam_eps", c.adam_eps);
    get("critic_beta2", c.critic_beta2);
    get("critic_weight_decay", c.critic_weight_decay);
    get("normalize_advantage", c.normalize_advantage);
    get("use_gae", c.use_gae);
    get("gae_lambda", c.gae_lambda);
    get("rollout_length", c.rollout_length);
    get("total_steps", c.total_steps);
    get("seed", c.seed);
    get("sigma", c.sigma);
    if (j.contains("variant")) {
      c.variant = advantage::ParseVariant(j.at("variant").get<std::string>());
    }
    get("shared_psi", c.shared_psi);
    get("actor_hidden", c.actor_hidden);
    get("critic_width", c.critic_width);
    get("critic_zs_dim", c.critic_zs_dim);
    get("critic_blocks", c.critic_blocks);
    get("cmaes_population", c.cmaes_population);
    get("cmaes_windows", c.cmaes_windows);
    get("cmaes_step", c.cmaes_step);
    get("eval_interval", c.eval_interval);
    get("eval_episodes", c.eval_episodes);
    get("eval_seed", c.eval_seed);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("TrainConfig: ") + e.what());
  }
  c.Validate();
  return c;
}

}  // namespace maca::trainer
