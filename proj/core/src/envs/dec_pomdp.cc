#include "maca/envs/dec_pomdp.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace maca::envs {

namespace {

void Require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("DecPomdp: " + what);
}

}  // namespace

DecPomdp::DecPomdp(DecPomdpTables tables) : t_(std::move(tables)) {
  Require(!t_.action_counts.empty(), "at least one agent required");
  for (size_t c : t_.action_counts) {
    Require(c > 0, "every agent needs at least one action");
    num_joint_ *= c;
  }
  Require(t_.num_states > 0, "at least one state required");
  Require(t_.gamma >= 0.0 && t_.gamma <= 1.0, "gamma must lie in [0, 1]");
  Require(t_.horizon > 0, "horizon must be positive");
  Require(t_.initial.size() == t_.num_states, "initial distribution size");
  double init_total = 0.0;
  for (double p : t_.initial) {
    Require(p >= 0.0, "negative initial probability");
    init_total += p;
  }
  Require(std::abs(init_total - 1.0) <= kRowTolerance,
          "initial distribution does not sum to 1");
  Require(t_.transitions.size() == t_.num_states * num_joint_,
          "transition table size");
  for (size_t k = 0; k < t_.transitions.size(); ++k) {
    double total = 0.0;
    for (const Transition& tr : t_.transitions[k]) {
      Require(tr.next_state < t_.num_states, "transition to unknown state");
      Require(tr.probability >= 0.0, "negative transition probability");
      Require(std::isfinite(tr.reward), "non-finite reward");
      total += tr.probability;
    }
    Require(std::abs(total - 1.0) <= kRowTolerance,
            "transition row " + std::to_string(k) + " sums to " +
                std::to_string(total));
  }
  const size_t n = n_agents();
  Require(t_.observations.size() == t_.num_states * n, "observation table size");
  obs_dim_ = t_.observations.front().size();
  for (const auto& o : t_.observations) {
    Require(o.size() == obs_dim_, "observation dimension varies");
  }
  if (t_.terminal.empty()) t_.terminal.assign(t_.num_states, false);
  Require(t_.terminal.size() == t_.num_states, "terminal flag table size");
  if (t_.subset_rewards) t_.subset_rewards->Validate(t_.action_counts);
}

size_t DecPomdp::total_actions() const {
  size_t total = 0;
  for (size_t c : t_.action_counts) total += c;
  return total;
}

size_t DecPomdp::JointIndex(std::span<const size_t> joint) const {
  if (joint.size() != n_agents()) {
    throw std::out_of_range("joint action has " + std::to_string(joint.size()) +
                            " entries for " + std::to_string(n_agents()) +
                            " agents");
  }
  size_t index = 0;
  for (size_t i = 0; i < joint.size(); ++i) {
    if (joint[i] >= t_.action_counts[i]) {
      throw std::out_of_range("action " + std::to_string(joint[i]) +
                              " out of range for agent " + std::to_string(i));
    }
    index = index * t_.action_counts[i] + joint[i];
  }
  return index;
}

JointAction DecPomdp::JointFromIndex(size_t index) const {
  if (index >= num_joint_) throw std::out_of_range("joint action index");
  JointAction joint(n_agents());
  for (size_t i = n_agents(); i-- > 0;) {
    joint[i] = index % t_.action_counts[i];
    index /= t_.action_counts[i];
  }
  return joint;
}

std::span<const Transition> DecPomdp::Transitions(size_t state,
                                                  size_t joint_index) const {
  if (state >= t_.num_states) throw std::out_of_range("state out of range");
  if (joint_index >= num_joint_) throw std::out_of_range("joint index");
  return t_.transitions[state * num_joint_ + joint_index];
}

double DecPomdp::ExpectedReward(size_t state, size_t joint_index) const {
  double r = 0.0;
  for (const Transition& tr : Transitions(state, joint_index)) {
    r += tr.probability * tr.reward;
  }
  return r;
}

const std::vector<double>& DecPomdp::Observation(size_t state,
                                                 size_t agent) const {
  if (state >= t_.num_states || agent >= n_agents()) {
    throw std::out_of_range("observation index");
  }
  return t_.observations[state * n_agents() + agent];
}

std::vector<std::vector<double>> DecPomdp::Observations(size_t state) const {
  std::vector<std::vector<double>> out;
  out.reserve(n_agents());
  for (size_t i = 0; i < n_agents(); ++i) out.push_back(Observation(state, i));
  return out;
}

EpisodeState DecPomdp::Reset(Rng& rng) const {
  return {rng.Categorical(t_.initial), 0};
}

StepResult DecPomdp::Step(const EpisodeState& current,
                          std::span<const size_t> joint, Rng& rng) const {
  if (current.state >= t_.num_states) throw std::out_of_range("state");
  const auto row = Transitions(current.state, JointIndex(joint));
  const double u = rng.Uniform();
  double acc = 0.0;
  size_t pick = row.size() - 1;
  for (size_t k = 0; k < row.size(); ++k) {
    acc += row[k].probability;
    if (u < acc) {
      pick = k;
      break;
    }
  }
  StepResult out;
  out.next = {row[pick].next_state, current.t + 1};
  out.reward = row[pick].reward;
  out.done = out.next.t >= t_.horizon || t_.terminal[out.next.state];
  out.observations = Observations(out.next.state);
  return out;
}

JointActionSpace::JointActionSpace(std::vector<size_t> counts)
    : counts_(std::move(counts)) {
  for (size_t c : counts_) size_ *= c;
}

JointAction JointActionSpace::At(size_t index) const {
  JointAction joint(counts_.size());
  for (size_t i = counts_.size(); i-- > 0;) {
    joint[i] = index % counts_[i];
    index /= counts_[i];
  }
  return joint;
}

size_t JointActionSpace::Index(std::span<const size_t> joint) const {
  if (joint.size() != counts_.size()) {
    throw std::out_of_range("joint action has the wrong number of agents");
  }
  size_t index = 0;
  for (size_t i = 0; i < joint.size(); ++i) {
    if (joint[i] >= counts_[i]) throw std::out_of_range("joint action entry");
    index = index * counts_[i] + joint[i];
  }
  return index;
}

Enumeration Enumerate(const DecPomdp& env, size_t cap) {
  const double pairs = static_cast<double>(env.num_states()) *
                       static_cast<double>(env.num_joint_actions());
  if (pairs > static_cast<double>(cap)) {
    throw std::length_error("enumeration of " + std::to_string(env.num_states()) +
                            " states x " +
                            std::to_string(env.num_joint_actions()) +
                            " joint actions exceeds the cap of " +
                            std::to_string(cap));
  }
  return {env.num_states(), JointActionSpace(env.action_counts())};
}

}  // namespace maca::envs
