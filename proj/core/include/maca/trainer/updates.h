#ifndef MACA_TRAINER_UPDATES_H_
#define MACA_TRAINER_UPDATES_H_

#include <span>
#include <vector>

#include "maca/critic/critic.h"
#include "maca/envs/trajectory.h"
#include "maca/numerics/autodiff.h"
#include "maca/numerics/optim.h"
#include "maca/numerics/tensor.h"
#include "maca/trainer/actor.h"
#include "maca/trainer/config.h"

namespace maca::trainer {

// Per-agent view of a batch for the clipped surrogate.
struct ActorBatch {
  Tensor observations;           // T x obs_dim
  std::vector<size_t> actions;   // T
  std::vector<double> old_log_probs;
  std::vector<double> advantages;
};

ActorBatch MakeActorBatch(const envs::TrajectoryBatch& batch, size_t agent,
                          std::span<const double> advantages);

// Negated clipped surrogate minus the entropy bonus, averaged over the batch
// (minimized by gradient descent).
Var ActorSurrogateLoss(Tape& tape, Actor& actor, const ActorBatch& batch,
                       double clip_param, double entropy_coef);

struct ActorDiagnostics {
  double loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  double grad_norm = 0.0;
};

// `advantages` holds one value per (step, agent) at index t * n + i. Every
// agent is updated against the same pre-update batch. Throws
// std::invalid_argument on a non-finite advantage.
std::vector<ActorDiagnostics> ActorUpdate(const envs::TrajectoryBatch& batch,
                                          std::span<const double> advantages,
                                          ActorSet& actors,
                                          std::vector<Adam>& optimizers,
                                          const TrainConfig& config);

// Zero mean, unit variance over all entries; a constant input maps to zeros.
std::vector<double> NormalizeAdvantages(std::span<const double> advantages);

// Stop-gradient one-step targets; terminal steps use the reward alone.
struct CriticTargets {
  std::vector<double> value;  // r + gamma V(s')
  std::vector<double> q;      // r + gamma Q(s', a')
};

CriticTargets ComputeCriticTargets(const envs::TrajectoryBatch& batch,
                                   const critic::Critic& critic, double gamma);

// Inputs of the critic loss stacked for one tape evaluation.
struct CriticBatch {
  Tensor observations;  // (T * n) x obs_dim
  Tensor policy_dists;  // T x dist_dim
  Tensor taken_dists;   // T x dist_dim
  CriticTargets targets;
};

CriticBatch MakeCriticBatch(const envs::TrajectoryBatch& batch,
                            const critic::Critic& critic, double gamma);

struct CriticLossTerms {
  Var total;
  Var value_loss;
  Var q_loss;
};

CriticLossTerms CriticLoss(Tape& tape, const critic::Critic& critic,
                           const CriticBatch& batch, double v_loss_coef,
                           double q_loss_coef);

struct CriticDiagnostics {
  double loss_v = 0.0;
  double loss_q = 0.0;
  double grad_norm = 0.0;
};

// ppo_epochs gradient steps against targets fixed at entry.
CriticDiagnostics CriticUpdate(const envs::TrajectoryBatch& batch,
                               critic::Critic& critic, Adam& optimizer,
                               const TrainConfig& config);

// GAE(lambda) over state values, one value per step.
std::vector<double> ComputeGae(const envs::TrajectoryBatch& batch,
                               const critic::Critic& critic, double gamma,
                               double lambda);

}  // namespace maca::trainer

#endif  // MACA_TRAINER_UPDATES_H_
