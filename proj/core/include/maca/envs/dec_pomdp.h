#ifndef MACA_ENVS_DEC_POMDP_H_
#define MACA_ENVS_DEC_POMDP_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "maca/envs/subset_reward_table.h"
#include "maca/numerics/random.h"

namespace maca::envs {

using JointAction = std::vector<size_t>;

struct Transition {
  size_t next_state = 0;
  double probability = 0.0;
  double reward = 0.0;
};

// Raw tables describing a finite Dec-POMDP. Joint actions are indexed in
// mixed radix with agent 0 most significant.
struct DecPomdpTables {
  std::string name;
  std::vector<size_t> action_counts;
  size_t num_states = 0;
  std::vector<double> initial;
  // Indexed by state * num_joint_actions + joint_index.
  std::vector<std::vector<Transition>> transitions;
  // Indexed by state * n_agents + agent.
  std::vector<std::vector<double>> observations;
  std::vector<bool> terminal;
  double gamma = 0.99;
  size_t horizon = 1;
  std::optional<SubsetRewardTable> subset_rewards;
};

// Caller-owned episode position.
struct EpisodeState {
  size_t state = 0;
  size_t t = 0;
};

struct StepResult {
  EpisodeState next;
  std::vector<std::vector<double>> observations;
  double reward = 0.0;
  bool done = false;
};

// Immutable finite Dec-POMDP <N, S, A, P, R, gamma, O> with a finite horizon.
// Episodes end when the horizon is reached or a terminal state is entered.
class DecPomdp {
 public:
  static constexpr double kRowTolerance = 1e-12;

  // Validates the tables; throws std::invalid_argument on violation.
  explicit DecPomdp(DecPomdpTables tables);

  const std::string& name() const { return t_.name; }
  size_t n_agents() const { return t_.action_counts.size(); }
  const std::vector<size_t>& action_counts() const { return t_.action_counts; }
  size_t num_actions(size_t agent) const { return t_.action_counts.at(agent); }
  size_t total_actions() const;
  size_t num_joint_actions() const { return num_joint_; }
  size_t num_states() const { return t_.num_states; }
  size_t obs_dim() const { return obs_dim_; }
  double gamma() const { return t_.gamma; }
  size_t horizon() const { return t_.horizon; }
  const std::vector<double>& initial_distribution() const { return t_.initial; }
  bool terminal(size_t state) const { return t_.terminal[state]; }
  const std::optional<SubsetRewardTable>& subset_rewards() const {
    return t_.subset_rewards;
  }
  const DecPomdpTables& tables() const { return t_; }

  size_t JointIndex(std::span<const size_t> joint) const;
  JointAction JointFromIndex(size_t index) const;

  std::span<const Transition> Transitions(size_t state, size_t joint_index) const;
  // Expected immediate reward sum_s' P(s'|s,a) R(s,a,s').
  double ExpectedReward(size_t state, size_t joint_index) const;
  const std::vector<double>& Observation(size_t state, size_t agent) const;
  std::vector<std::vector<double>> Observations(size_t state) const;

  EpisodeState Reset(Rng& rng) const;
  // Throws std::out_of_range for an invalid state or action.
  StepResult Step(const EpisodeState& current, std::span<const size_t> joint,
                  Rng& rng) const;

 private:
  DecPomdpTables t_;
  size_t num_joint_ = 1;
  size_t obs_dim_ = 0;
};

// Mixed-radix enumeration of joint actions with the first entry most
// significant.
class JointActionSpace {
 public:
  explicit JointActionSpace(std::vector<size_t> counts);

  size_t size() const { return size_; }
  JointAction At(size_t index) const;
  // Inverse of At(); throws std::out_of_range on a bad action.
  size_t Index(std::span<const size_t> joint) const;
  const std::vector<size_t>& counts() const { return counts_; }

  class Iterator {
   public:
    Iterator(const JointActionSpace* space, size_t index)
        : space_(space), index_(index) {}
    JointAction operator*() const { return space_->At(index_); }
    Iterator& operator++() {
      ++index_;
      return *this;
    }
    bool operator==(const Iterator& o) const { return index_ == o.index_; }

   private:
    const JointActionSpace* space_;
    size_t index_;
  };
  Iterator begin() const { return {this, 0}; }
  Iterator end() const { return {this, size_}; }

 private:
  std::vector<size_t> counts_;
  size_t size_ = 1;
};

inline constexpr size_t kDefaultEnumerationCap = 10'000'000;

struct Enumeration {
  size_t num_states = 0;
  JointActionSpace joint_actions;
};

// Exhaustive state/joint-action enumeration. Throws std::length_error naming
// the cap when |S| x |A| exceeds it.
Enumeration Enumerate(const DecPomdp& env, size_t cap = kDefaultEnumerationCap);

}  // namespace maca::envs

#endif  // MACA_ENVS_DEC_POMDP_H_
