#ifndef MACA_TRAINER_ACTOR_H_
#define MACA_TRAINER_ACTOR_H_

#include <span>
#include <string>
#include <vector>

#include "maca/envs/dec_pomdp.h"
#include "maca/envs/trajectory.h"
#include "maca/numerics/autodiff.h"
#include "maca/numerics/layers.h"
#include "maca/numerics/random.h"
#include "maca/numerics/tensor.h"

namespace maca::trainer {

// Categorical policy over one agent's actions from its local observation.
class Actor {
 public:
  Actor(std::string name, size_t obs_dim, size_t num_actions,
        const std::vector<size_t>& hidden, Rng& rng);

  // obs: B x obs_dim -> logits B x num_actions.
  Var Logits(Tape& tape, const Tensor& obs);
  std::vector<double> Policy(std::span<const double> obs);
  std::vector<Parameter*> Parameters() { return net_.Parameters(); }

  size_t obs_dim() const { return obs_dim_; }
  size_t num_actions() const { return num_actions_; }

 private:
  size_t obs_dim_;
  size_t num_actions_;
  Mlp net_;
};

// Independent (non-shared) actors, one per agent.
class ActorSet {
 public:
  ActorSet(const envs::DecPomdp& env, const std::vector<size_t>& hidden,
           uint64_t seed);

  size_t size() const { return actors_.size(); }
  Actor& operator[](size_t i) { return actors_[i]; }

  envs::PolicyRows Policies(const envs::Observations& observations);
  std::vector<Parameter*> Parameters();

 private:
  std::vector<Actor> actors_;
};

}  // namespace maca::trainer

#endif  // MACA_TRAINER_ACTOR_H_
