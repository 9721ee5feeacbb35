#include "maca/trainer/actor.h"

#include <stdexcept>

namespace maca::trainer {

Actor::Actor(std::string name, size_t obs_dim, size_t num_actions,
             const std::vector<size_t>& hidden, Rng& rng)
    : obs_dim_(obs_dim),
      num_actions_(num_actions),
      net_(std::move(name), obs_dim, hidden, num_actions, Activation::kRelu, rng,
           0.01) {}

Var Actor::Logits(Tape& tape, const Tensor& obs) {
  if (obs.cols() != obs_dim_) {
    throw std::invalid_argument("Actor: observation width " +
                                std::to_string(obs.cols()) + " != " +
                                std::to_string(obs_dim_));
  }
  return net_.Forward(tape, tape.Constant(obs));
}

std::vector<double> Actor::Policy(std::span<const double> obs) {
  Tape tape;
  const Var logits =
      Logits(tape, Tensor::Row(std::vector<double>(obs.begin(), obs.end())));
  return Softmax(logits.value().data());
}

ActorSet::ActorSet(const envs::DecPomdp& env, const std::vector<size_t>& hidden,
                   uint64_t seed) {
  Rng rng(seed);
  for (size_t i = 0; i < env.n_agents(); ++i) {
    actors_.emplace_back("actor" + std::to_string(i), env.obs_dim(),
                         env.num_actions(i), hidden, rng);
  }
}

envs::PolicyRows ActorSet::Policies(const envs::Observations& observations) {
  if (observations.size() != actors_.size()) {
    throw std::invalid_argument("ActorSet: one observation per agent expected");
  }
  envs::PolicyRows out;
  out.reserve(actors_.size());
  for (size_t i = 0; i < actors_.size(); ++i) {
    out.push_back(actors_[i].Policy(observations[i]));
  }
  return out;
}

std::vector<Parameter*> ActorSet::Parameters() {
  std::vector<Parameter*> out;
  for (Actor& a : actors_) {
    auto p = a.Parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

}  // namespace maca::trainer
