#include "maca/envs/subset_reward_table.h"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace maca::envs {

SubsetRewardTable::SubsetRewardTable(std::vector<SubsetReward> entries)
    : entries_(std::move(entries)) {}

void SubsetRewardTable::Validate(std::span<const size_t> action_counts) const {
  for (size_t e = 0; e < entries_.size(); ++e) {
    const SubsetReward& entry = entries_[e];
    const std::string where = "subset reward entry " + std::to_string(e) + ": ";
    if (entry.agents.empty()) {
      throw std::invalid_argument(where + "empty agent subset");
    }
    if (entry.agents.size() != entry.actions.size()) {
      throw std::invalid_argument(where + "agents/actions length mismatch");
    }
    std::vector<size_t> sorted = entry.agents;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw std::invalid_argument(where + "repeated agent");
    }
    for (size_t k = 0; k < entry.agents.size(); ++k) {
      if (entry.agents[k] >= action_counts.size()) {
        throw std::invalid_argument(where + "agent outside N");
      }
      if (entry.actions[k] >= action_counts[entry.agents[k]]) {
        throw std::invalid_argument(where + "action out of range");
      }
    }
  }
}

double SubsetRewardTable::Reward(std::span<const size_t> joint) const {
  double total = 0.0;
  for (const SubsetReward& entry : entries_) {
    bool match = true;
    for (size_t k = 0; k < entry.agents.size() && match; ++k) {
      match = joint[entry.agents[k]] == entry.actions[k];
    }
    if (match) total += entry.reward;
  }
  return total;
}

double SubsetRewardTable::MaxReward(std::span<const size_t> action_counts) const {
  std::vector<size_t> joint(action_counts.size(), 0);
  double best = -std::numeric_limits<double>::infinity();
  while (true) {
    best = std::max(best, Reward(joint));
    size_t i = joint.size();
    while (i > 0) {
      --i;
      if (++joint[i] < action_counts[i]) break;
      joint[i] = 0;
      if (i == 0) return best;
    }
    if (joint.empty()) return best;
  }
}

}  // namespace maca::envs
