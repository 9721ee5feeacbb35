#include "maca/trainer/updates.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace maca::trainer {

namespace {

Tensor StackObservations(const envs::TrajectoryBatch& batch, size_t n,
                         size_t obs_dim, bool next) {
  Tensor out({batch.size() * n, obs_dim});
  for (size_t t = 0; t < batch.size(); ++t) {
    const auto& obs =
        next ? batch.steps[t].next_observations : batch.steps[t].observations;
    for (size_t i = 0; i < n; ++i) {
      if (obs[i].size() != obs_dim) {
        throw std::invalid_argument("observation width mismatch at step " +
                                    std::to_string(t));
      }
      std::copy(obs[i].begin(), obs[i].end(), out.row(t * n + i).begin());
    }
  }
  return out;
}

Tensor Column(std::span<const double> values) {
  Tensor out({values.size(), 1});
  std::copy(values.begin(), values.end(), out.data().begin());
  return out;
}

void CopyRow(std::span<const double> from, std::span<double> to) {
  std::copy(from.begin(), from.end(), to.begin());
}

}  // namespace

ActorBatch MakeActorBatch(const envs::TrajectoryBatch& batch, size_t agent,
                          std::span<const double> advantages) {
  const size_t T = batch.size();
  if (T == 0) throw std::invalid_argument("ActorBatch: empty batch");
  const size_t n = batch.steps[0].actions.size();
  if (advantages.size() != T * n) {
    throw std::invalid_argument("ActorBatch: expected one advantage per step and agent");
  }
  const size_t obs_dim = batch.steps[0].observations.at(agent).size();
  ActorBatch out;
  out.observations = Tensor({T, obs_dim});
  out.actions.resize(T);
  out.old_log_probs.resize(T);
  out.advantages.resize(T);
  for (size_t t = 0; t < T; ++t) {
    const envs::StepRecord& step = batch.steps[t];
    CopyRow(step.observations[agent], out.observations.row(t));
    const size_t a = step.actions[agent];
    out.actions[t] = a;
    out.old_log_probs[t] = std::log(step.policies[agent].at(a));
    const double adv = advantages[t * n + agent];
    if (!std::isfinite(adv)) {
      throw std::invalid_argument("non-finite advantage at step " + std::to_string(t) +
                                  ", agent " + std::to_string(agent));
    }
    out.advantages[t] = adv;
  }
  return out;
}

Var ActorSurrogateLoss(Tape& tape, Actor& actor, const ActorBatch& batch,
                       double clip_param, double entropy_coef) {
  const Var logits = actor.Logits(tape, batch.observations);
  const Var log_probs = LogSoftmaxRows(logits);
  const Var taken = GatherCols(log_probs, batch.actions);
  const Var ratio = Exp(Sub(taken, tape.Constant(Column(batch.old_log_probs))));
  const Var adv = tape.Constant(Column(batch.advantages));
  const Var unclipped = Mul(ratio, adv);
  const Var clipped = Mul(Clamp(ratio, 1.0 - clip_param, 1.0 + clip_param), adv);
  const Var surrogate = Mean(Minimum(unclipped, clipped));
  const Var entropy = Scale(Mean(RowSum(Mul(SoftmaxRows(logits), log_probs))), -1.0);
  return Sub(Scale(surrogate, -1.0), Scale(entropy, entropy_coef));
}

std::vector<ActorDiagnostics> ActorUpdate(const envs::TrajectoryBatch& batch,
                                          std::span<const double> advantages,
                                          ActorSet& actors,
                                          std::vector<Adam>& optimizers,
                                          const TrainConfig& config) {
  if (optimizers.size() != actors.size()) {
    throw std::invalid_argument("ActorUpdate: one optimizer per actor expected");
  }
  for (double a : advantages) {
    if (!std::isfinite(a)) throw std::invalid_argument("non-finite advantage");
  }
  std::vector<ActorDiagnostics> out(actors.size());
  if (batch.empty()) return out;
  for (size_t i = 0; i < actors.size(); ++i) {
    const ActorBatch ab = MakeActorBatch(batch, i, advantages);
    const auto params = actors[i].Parameters();
    for (size_t epoch = 0; epoch < config.ppo_epochs; ++epoch) {
      Tape tape;
      const Var loss = ActorSurrogateLoss(tape, actors[i], ab, config.clip_param,
                                          config.entropy_coef);
      optimizers[i].ZeroGrad();
      tape.Backward(loss);
      const double norm = ClipGradNorm(params, config.max_grad_norm);
      optimizers[i].Step();
      if (epoch + 1 == config.ppo_epochs) {
        out[i].loss = loss.scalar();
        out[i].grad_norm = norm;
      }
    }
    // Post-update statistics against the behaviour policy.
    Tape tape;
    const Tensor log_probs = LogSoftmaxRows(actors[i].Logits(tape, ab.observations)).value();
    double kl = 0.0, clipped = 0.0, entropy = 0.0;
    for (size_t t = 0; t < ab.actions.size(); ++t) {
      const double lp = log_probs(t, ab.actions[t]);
      kl += ab.old_log_probs[t] - lp;
      if (std::abs(std::exp(lp - ab.old_log_probs[t]) - 1.0) > config.clip_param) {
        clipped += 1.0;
      }
      for (size_t a = 0; a < log_probs.cols(); ++a) {
        entropy -= std::exp(log_probs(t, a)) * log_probs(t, a);
      }
    }
    const double T = static_cast<double>(ab.actions.size());
    out[i].approx_kl = kl / T;
    out[i].clip_fraction = clipped / T;
    out[i].entropy = entropy / T;
  }
  return out;
}

std::vector<double> NormalizeAdvantages(std::span<const double> advantages) {
  std::vector<double> out(advantages.begin(), advantages.end());
  if (out.empty()) return out;
  double mean = 0.0;
  for (double a : out) mean += a;
  mean /= static_cast<double>(out.size());
  double var = 0.0;
  for (double a : out) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / static_cast<double>(out.size()));
  for (double& a : out) a = sd > 1e-12 ? (a - mean) / (sd + 1e-8) : 0.0;
  return out;
}

CriticTargets ComputeCriticTargets(const envs::TrajectoryBatch& batch,
                                   const critic::Critic& critic, double gamma) {
  const size_t T = batch.size();
  const size_t n = critic.n_agents();
  CriticTargets out;
  out.value.resize(T);
  out.q.resize(T);
  if (T == 0) return out;
  batch.Validate(n);
  Tape tape;
  const auto enc = critic.EncodeBatch(
      tape, StackObservations(batch, n, critic.config().obs_dim, /*next=*/true));
  const Tensor& pooled = enc.pooled.value();
  for (size_t t = 0; t < T; ++t) {
    const envs::StepRecord& step = batch.steps[t];
    out.value[t] = step.reward;
    out.q[t] = step.reward;
    if (step.done || gamma == 0.0) continue;
    const auto z = pooled.row(t);
    out.value[t] += gamma * critic.VValue(z, batch.NextPolicies(t));
    out.q[t] += gamma * critic.QValue(
        z, critic::OneHotDist(batch.NextActions(t), critic.config().action_counts));
  }
  return out;
}

CriticBatch MakeCriticBatch(const envs::TrajectoryBatch& batch,
                            const critic::Critic& critic, double gamma) {
  const size_t T = batch.size();
  const size_t n = critic.n_agents();
  CriticBatch out;
  out.targets = ComputeCriticTargets(batch, critic, gamma);
  out.observations = StackObservations(batch, n, critic.config().obs_dim, false);
  out.policy_dists = Tensor({T, critic.dist_dim()});
  out.taken_dists = Tensor({T, critic.dist_dim()});
  std::vector<size_t> everyone(n);
  for (size_t i = 0; i < n; ++i) everyone[i] = i;
  for (size_t t = 0; t < T; ++t) {
    const envs::StepRecord& step = batch.steps[t];
    CopyRow(critic::MarginalizedDist(step.policies, step.actions, everyone).Flatten(),
            out.policy_dists.row(t));
    CopyRow(critic::OneHotDist(step.actions, critic.config().action_counts).Flatten(),
            out.taken_dists.row(t));
  }
  return out;
}

CriticLossTerms CriticLoss(Tape& tape, const critic::Critic& critic,
                           const CriticBatch& batch, double v_loss_coef,
                           double q_loss_coef) {
  const auto enc = critic.EncodeBatch(tape, batch.observations);
  const Var v = critic.QBatch(tape, enc.pooled, batch.policy_dists);
  const Var q = critic.QBatch(tape, enc.pooled, batch.taken_dists);
  CriticLossTerms out;
  out.value_loss =
      Mean(Square(Sub(v, tape.Constant(Column(batch.targets.value)))));
  out.q_loss = Mean(Square(Sub(q, tape.Constant(Column(batch.targets.q)))));
  out.total = Add(Scale(out.value_loss, v_loss_coef), Scale(out.q_loss, q_loss_coef));
  return out;
}

CriticDiagnostics CriticUpdate(const envs::TrajectoryBatch& batch,
                               critic::Critic& critic, Adam& optimizer,
                               const TrainConfig& config) {
  CriticDiagnostics out;
  if (batch.empty()) return out;
  const CriticBatch cb = MakeCriticBatch(batch, critic, config.gamma);
  const auto params = critic.Parameters();
  for (size_t epoch = 0; epoch < config.ppo_epochs; ++epoch) {
    Tape tape;
    const CriticLossTerms terms =
        CriticLoss(tape, critic, cb, config.v_loss_coef, config.q_loss_coef);
    if (epoch == 0) {
      out.loss_v = terms.value_loss.scalar();
      out.loss_q = terms.q_loss.scalar();
      if (!std::isfinite(terms.total.scalar())) return out;
    }
    optimizer.ZeroGrad();
    tape.Backward(terms.total);
    const double norm = ClipGradNorm(params, config.max_grad_norm);
    if (epoch == 0) out.grad_norm = norm;
    optimizer.Step();
  }
  return out;
}

std::vector<double> ComputeGae(const envs::TrajectoryBatch& batch,
                               const critic::Critic& critic, double gamma,
                               double lambda) {
  const size_t T = batch.size();
  const size_t n = critic.n_agents();
  std::vector<double> out(T, 0.0);
  if (T == 0) return out;
  batch.Validate(n);
  const size_t obs_dim = critic.config().obs_dim;
  Tape tape;
  const Tensor now =
      critic.EncodeBatch(tape, StackObservations(batch, n, obs_dim, false)).pooled.value();
  const Tensor next =
      critic.EncodeBatch(tape, StackObservations(batch, n, obs_dim, true)).pooled.value();
  double running = 0.0;
  for (size_t k = T; k-- > 0;) {
    const envs::StepRecord& step = batch.steps[k];
    const double v = critic.VValue(now.row(k), step.policies);
    const double v_next =
        step.done ? 0.0 : critic.VValue(next.row(k), batch.NextPolicies(k));
    const double delta = step.reward + gamma * v_next - v;
    running = delta + (step.done ? 0.0 : gamma * lambda * running);
    out[k] = running;
  }
  return out;
}

}  // namespace maca::trainer
