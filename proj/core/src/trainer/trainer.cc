#include "maca/trainer/trainer.h"

#include <algorithm>
#include <cmath>

namespace maca::trainer {

using nlohmann::json;

namespace {

uint64_t DeriveSeed(uint64_t seed, uint64_t stream) {
  Rng rng(seed ^ (0x9E3779B97F4A7C15ull * (stream + 1)));
  return rng.NextU64();
}

critic::CriticConfig MakeCriticConfig(const envs::DecPomdp& env,
                                      const TrainConfig& c) {
  critic::CriticConfig out;
  out.obs_dim = env.obs_dim();
  out.action_counts = env.action_counts();
  out.width = c.critic_width;
  out.zs_dim = c.critic_zs_dim;
  out.num_blocks = c.critic_blocks;
  return out;
}

bool AllFinite(const std::vector<Parameter*>& params) {
  return std::all_of(params.begin(), params.end(),
                     [](const Parameter* p) { return p->value.AllFinite(); });
}

}  // namespace

json ToJson(const MetricRecord& r) {
  return {
      {"step", r.step},
      {"return_mean", r.return_mean},
      {"return_std", r.return_std},
      {"loss_v", r.loss_v},
      {"loss_q", r.loss_q},
      {"psi_mean", r.psi_mean},
      {"corrset_mean_size", r.corrset_mean_size},
      {"advantage_mean", r.advantage_mean},
      {"advantage_var", r.advantage_var},
      {"b_jnt_var", r.b_jnt_var},
      {"b_ind_var", r.b_ind_var},
      {"b_cor_var", r.b_cor_var},
      {"b_maca_var", r.b_maca_var},
      {"policy_entropy", r.policy_entropy},
      {"max_simplex_error", r.max_simplex_error},
      {"cma_generation", r.cma_generation},
  };
}

MetricRecord MetricRecordFromJson(const json& j) {
  MetricRecord r;
  try {
    r.step = j.at("step").get<size_t>();
    r.return_mean = j.at("return_mean").get<double>();
    r.return_std = j.at("return_std").get<double>();
    r.loss_v = j.at("loss_v").get<double>();
    r.loss_q = j.at("loss_q").get<double>();
    r.psi_mean = j.at("psi_mean").get<advantage::Psi>();
    r.corrset_mean_size = j.at("corrset_mean_size").get<double>();
    r.advantage_mean = j.value("advantage_mean", 0.0);
    r.advantage_var = j.value("advantage_var", 0.0);
    r.b_jnt_var = j.value("b_jnt_var", 0.0);
    r.b_ind_var = j.value("b_ind_var", 0.0);
    r.b_cor_var = j.value("b_cor_var", 0.0);
    r.b_maca_var = j.value("b_maca_var", 0.0);
    r.policy_entropy = j.value("policy_entropy", 0.0);
    r.max_simplex_error = j.value("max_simplex_error", 0.0);
    r.cma_generation = j.value("cma_generation", size_t{0});
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("metric record: ") + e.what());
  }
  return r;
}

Trainer::Trainer(const envs::DecPomdp& env, TrainConfig config)
    : env_(env),
      config_((config.Validate(), std::move(config))),
      actors_(env, config_.actor_hidden, DeriveSeed(config_.seed, 0)),
      critic_(MakeCriticConfig(env, config_), DeriveSeed(config_.seed, 1)),
      coeff_(config_.critic_zs_dim, config_.shared_psi),
      critic_opt_(critic_.Parameters(),
                  AdamOptions{config_.critic_lr, 0.9, config_.critic_beta2,
                              config_.adam_eps, config_.critic_weight_decay}),
      collector_(env, DeriveSeed(config_.seed, 2)),
      cma_seed_(DeriveSeed(config_.seed, 3)) {
  for (size_t i = 0; i < actors_.size(); ++i) {
    actor_opts_.emplace_back(actors_[i].Parameters(),
                             AdamOptions{config_.actor_lr, 0.9, 0.999,
                                         config_.adam_eps, 0.0});
  }
}

double Trainer::sigma() const {
  return config_.sigma < 0.0 ? advantage::DefaultSigma(env_.n_agents())
                             : config_.sigma;
}

PolicyFn Trainer::policy() {
  return [this](const envs::Observations& obs) { return actors_.Policies(obs); };
}

RoundStats Trainer::Round() {
  RoundStats stats;
  const envs::TrajectoryBatch batch =
      collector_.Collect(policy(), config_.rollout_length);

  stats.critic = CriticUpdate(batch, critic_, critic_opt_, config_);
  if (!std::isfinite(stats.critic.loss_v) || !std::isfinite(stats.critic.loss_q) ||
      !AllFinite(critic_.Parameters())) {
    throw TrainingDiverged("critic loss diverged", StateDump("critic", &stats));
  }

  const advantage::AdvantageEstimate est = advantage::ComputeMacaAdvantage(
      batch, critic_, coeff_, {sigma(), config_.variant});
  stats.advantage = advantage::Summarize(est);
  max_simplex_error_ = std::max(max_simplex_error_, stats.advantage.max_simplex_error);

  const size_t n = env_.n_agents();
  std::vector<double> adv(est.records.size());
  if (config_.use_gae) {
    const auto gae = ComputeGae(batch, critic_, config_.gamma, config_.gae_lambda);
    for (size_t t = 0; t < batch.size(); ++t) {
      for (size_t i = 0; i < n; ++i) adv[t * n + i] = gae[t];
    }
  } else {
    for (size_t k = 0; k < adv.size(); ++k) adv[k] = est.records[k].advantage;
  }
  for (double a : adv) {
    if (!std::isfinite(a)) {
      throw TrainingDiverged("non-finite advantage", StateDump("advantage", &stats));
    }
  }
  if (config_.normalize_advantage) adv = NormalizeAdvantages(adv);

  stats.actors = ActorUpdate(batch, adv, actors_, actor_opts_, config_);
  for (const ActorDiagnostics& d : stats.actors) {
    if (!std::isfinite(d.loss)) {
      throw TrainingDiverged("actor loss diverged", StateDump("actor", &stats));
    }
  }
  if (!AllFinite(actors_.Parameters())) {
    throw TrainingDiverged("actor parameters diverged", StateDump("actor", &stats));
  }
  return stats;
}

EvalResult Trainer::Evaluate(size_t episodes, uint64_t seed) {
  return EvaluatePolicy(env_, policy(), episodes, seed);
}

std::vector<AttentionSnapshot> Trainer::Attention(
    const std::vector<size_t>& states) const {
  std::vector<AttentionSnapshot> out;
  out.reserve(states.size());
  for (size_t s : states) {
    const auto enc = critic_.Encode(env_.Observations(s));
    AttentionSnapshot snap;
    snap.state = s;
    snap.rollout = critic::ComputeAttentionRollout(enc.attention).matrix;
    for (size_t i = 0; i < env_.n_agents(); ++i) {
      snap.corrsets.push_back(
          advantage::ComputeCorrSet({snap.rollout}, i, sigma()).members);
    }
    out.push_back(std::move(snap));
  }
  return out;
}

std::string Trainer::StateDump(const std::string& reason,
                               const RoundStats* stats) const {
  json dump = {{"reason", reason},
               {"env", env_.name()},
               {"env_steps", collector_.steps_taken()},
               {"config", ToJson(config_)},
               {"coefficients", coeff_.params()}};
  if (stats != nullptr) {
    dump["loss_v"] = stats->critic.loss_v;
    dump["loss_q"] = stats->critic.loss_q;
    dump["critic_grad_norm"] = stats->critic.grad_norm;
    dump["advantage_mean"] = stats->advantage.advantage.mean;
    dump["advantage_var"] = stats->advantage.advantage.variance;
    dump["psi_mean"] = stats->advantage.psi_mean;
    json actors = json::array();
    for (const ActorDiagnostics& d : stats->actors) {
      actors.push_back({{"loss", d.loss}, {"grad_norm", d.grad_norm}});
    }
    dump["actors"] = actors;
  }
  // NaN is not representable in JSON; the serializer writes null.
  return dump.dump();
}

TrainResult Trainer::Run(const MetricCallback& on_metric) {
  TrainResult result;
  const bool search = advantage::UsesCoefficients(config_.variant);
  std::optional<CmaEs> cma;
  if (search) {
    cma.emplace(coeff_.params(), config_.cmaes_step, config_.cmaes_population,
                cma_seed_);
  }
  std::vector<std::vector<double>> candidates;
  std::vector<double> fitness;
  size_t window_round = 0;
  double before = 0.0;
  if (search) before = Evaluate(config_.eval_episodes, config_.eval_seed).return_mean;

  RoundStats last;
  auto emit = [&](size_t step) {
    const EvalResult eval = Evaluate(config_.eval_episodes, config_.eval_seed);
    MetricRecord r;
    r.step = step;
    r.return_mean = eval.return_mean;
    r.return_std = eval.return_std;
    r.loss_v = last.critic.loss_v;
    r.loss_q = last.critic.loss_q;
    r.psi_mean = last.advantage.psi_mean;
    r.corrset_mean_size = last.advantage.corrset_mean_size;
    r.advantage_mean = last.advantage.advantage.mean;
    r.advantage_var = last.advantage.advantage.variance;
    r.b_jnt_var = last.advantage.b_jnt.variance;
    r.b_ind_var = last.advantage.b_ind.variance;
    r.b_cor_var = last.advantage.b_cor.variance;
    r.b_maca_var = last.advantage.b_maca.variance;
    for (const ActorDiagnostics& d : last.actors) r.policy_entropy += d.entropy;
    if (!last.actors.empty()) r.policy_entropy /= static_cast<double>(last.actors.size());
    r.max_simplex_error = max_simplex_error_;
    r.cma_generation = cma ? cma->generation() : 0;
    result.metrics.push_back(r);
    result.best_return = std::max(result.best_return, r.return_mean);
    if (on_metric) on_metric(r);
  };

  emit(0);
  result.best_return = result.metrics.front().return_mean;
  size_t next_eval = config_.eval_interval;
  while (env_steps() < config_.total_steps) {
    if (search && window_round == 0) {
      if (candidates.empty()) {
        candidates = cma->Ask();
        fitness.clear();
      }
      coeff_.SetParams(candidates[fitness.size()]);
    }
    last = Round();
    if (search && ++window_round == config_.cmaes_windows) {
      window_round = 0;
      const double after =
          Evaluate(config_.eval_episodes, config_.eval_seed).return_mean;
      fitness.push_back(-(after - before));
      before = after;
      if (fitness.size() == candidates.size()) {
        cma->Tell(candidates, fitness);
        coeff_.SetParams(cma->mean());
        candidates.clear();
      }
    }
    if (env_steps() >= next_eval) {
      emit(env_steps());
      while (next_eval <= env_steps()) next_eval += config_.eval_interval;
    }
  }
  if (result.metrics.back().step != env_steps()) emit(env_steps());

  result.final_return = result.metrics.back().return_mean;
  result.max_simplex_error = max_simplex_error_;
  result.env_steps = env_steps();
  if (cma) {
    result.cma_generations = cma->generation();
    result.cma_resets = cma->resets();
  }
  return result;
}

}  // namespace maca::trainer
