#include "maca/trainer/rollout.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace maca::trainer {

namespace {

envs::JointAction SampleJoint(const envs::PolicyRows& policies, Rng& rng) {
  envs::JointAction joint;
  joint.reserve(policies.size());
  for (const auto& row : policies) joint.push_back(rng.Categorical(row));
  return joint;
}

envs::PolicyRows CheckedPolicy(const PolicyFn& policy, const envs::DecPomdp& env,
                               const envs::Observations& obs) {
  envs::PolicyRows rows = policy(obs);
  if (rows.size() != env.n_agents()) {
    throw std::invalid_argument("policy returned the wrong number of rows");
  }
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != env.num_actions(i)) {
      throw std::invalid_argument("policy row has the wrong number of actions");
    }
    double total = 0.0;
    for (double p : rows[i]) {
      if (!(p >= 0.0)) throw std::invalid_argument("policy row has a negative entry");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw std::invalid_argument("policy row does not sum to 1");
    }
  }
  return rows;
}

}  // namespace

RolloutCollector::RolloutCollector(const envs::DecPomdp& env, uint64_t seed)
    : env_(env), rng_(seed) {
  state_ = env_.Reset(rng_);
}

envs::TrajectoryBatch RolloutCollector::Collect(const PolicyFn& policy,
                                                size_t length) {
  envs::TrajectoryBatch batch;
  batch.steps.reserve(length);
  envs::Observations obs = env_.Observations(state_.state);
  for (size_t k = 0; k < length; ++k) {
    envs::StepRecord rec;
    rec.state = state_.state;
    rec.t = state_.t;
    rec.observations = obs;
    rec.policies = CheckedPolicy(policy, env_, obs);
    rec.actions = SampleJoint(rec.policies, rng_);
    envs::StepResult res = env_.Step(state_, rec.actions, rng_);
    rec.reward = res.reward;
    rec.done = res.done;
    rec.next_state = res.next.state;
    rec.next_observations = res.observations;
    ++steps_taken_;
    if (res.done) {
      ++episodes_finished_;
      state_ = env_.Reset(rng_);
      obs = env_.Observations(state_.state);
    } else {
      state_ = res.next;
      obs = std::move(res.observations);
    }
    batch.steps.push_back(std::move(rec));
  }
  if (!batch.empty() && !batch.steps.back().done) {
    batch.bootstrap_policies = CheckedPolicy(policy, env_, obs);
    batch.bootstrap_actions = SampleJoint(batch.bootstrap_policies, rng_);
  }
  return batch;
}

envs::TrajectoryBatch CollectRollouts(const envs::DecPomdp& env,
                                      const PolicyFn& policy, size_t length,
                                      Rng& rng) {
  RolloutCollector collector(env, rng.Fork());
  return collector.Collect(policy, length);
}

EvalResult EvaluatePolicy(const envs::DecPomdp& env, const PolicyFn& policy,
                          size_t episodes, uint64_t seed) {
  EvalResult out;
  std::set<size_t> visited;
  for (size_t k = 0; k < episodes; ++k) {
    Rng rng(seed + k);
    envs::EpisodeState s = env.Reset(rng);
    double total = 0.0;
    for (;;) {
      visited.insert(s.state);
      const envs::PolicyRows rows =
          CheckedPolicy(policy, env, env.Observations(s.state));
      const envs::StepResult res = env.Step(s, SampleJoint(rows, rng), rng);
      total += res.reward;
      if (res.done) break;
      s = res.next;
    }
    out.returns.push_back(total);
  }
  if (!out.returns.empty()) {
    double mean = 0.0;
    for (double r : out.returns) mean += r;
    mean /= static_cast<double>(out.returns.size());
    double var = 0.0;
    for (double r : out.returns) var += (r - mean) * (r - mean);
    out.return_mean = mean;
    out.return_std = std::sqrt(var / static_cast<double>(out.returns.size()));
  }
  out.visited_states.assign(visited.begin(), visited.end());
  return out;
}

}  // namespace maca::trainer
