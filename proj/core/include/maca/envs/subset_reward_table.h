#ifndef MACA_ENVS_SUBSET_REWARD_TABLE_H_
#define MACA_ENVS_SUBSET_REWARD_TABLE_H_

#include <cstddef>
#include <span>
#include <vector>

namespace maca::envs {

// Reward paid when every agent in `agents` plays the matching entry of
// `actions`.
struct SubsetReward {
  std::vector<size_t> agents;
  std::vector<size_t> actions;
  double reward = 0.0;
};

// Global reward decomposed as r(a) = sum over entries (G, a_G) matching a.
class SubsetRewardTable {
 public:
  SubsetRewardTable() = default;
  explicit SubsetRewardTable(std::vector<SubsetReward> entries);

  // Throws std::invalid_argument if an entry is empty, repeats an agent,
  // names an agent outside [0, n_agents) or an action outside its range.
  void Validate(std::span<const size_t> action_counts) const;

  double Reward(std::span<const size_t> joint) const;
  // Highest reward over all joint actions (brute force).
  double MaxReward(std::span<const size_t> action_counts) const;

  const std::vector<SubsetReward>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }

 private:
  std::vector<SubsetReward> entries_;
};

}  // namespace maca::envs

#endif  // MACA_ENVS_SUBSET_REWARD_TABLE_H_
