#ifndef MACA_ENVS_GAMES_H_
#define MACA_ENVS_GAMES_H_

#include <cstdint>
#include <vector>

#include "maca/envs/dec_pomdp.h"

namespace maca::envs {

// `count` subsets of `level` agents, each paying a reward drawn uniformly
// from [reward_lo, reward_hi] for one randomly chosen sub-action.
struct LevelSpec {
  size_t level = 1;
  size_t count = 1;
  double reward_lo = 0.0;
  double reward_hi = 1.0;
};

struct SubsetGameOptions {
  size_t num_actions = 2;
  // Length of the state cycle; each state is one round of the repeated game.
  size_t horizon = 1;
  double gamma = 0.99;
};

// Repeated game over a cycle of `horizon` state tags whose per-round reward is
// the table sum. Observations are one-hot agent id followed by one-hot state
// tag.
DecPomdp MakeSubsetGameFromTable(size_t n_agents, SubsetRewardTable table,
                                 const SubsetGameOptions& options = {});

// Generates the table from `levels`; deterministic per seed. Throws
// std::invalid_argument when a level is outside [1, n_agents].
DecPomdp MakeSubsetGame(size_t n_agents, const std::vector<LevelSpec>& levels,
                        uint64_t seed, const SubsetGameOptions& options = {});

// Random tabular game for oracle checks: random initial distribution,
// transition rows (stochastic unless `deterministic`), and rewards in [0, 1)
// per (s, a, s').
struct RandomGameOptions {
  size_t num_states = 1;
  size_t horizon = 1;
  double gamma = 0.99;
  size_t max_successors = 2;
  bool deterministic = false;
};
DecPomdp MakeRandomGame(const std::vector<size_t>& action_counts,
                        uint64_t seed, const RandomGameOptions& options = {});

struct GridCell {
  size_t x = 0;
  size_t y = 0;
  bool operator==(const GridCell&) const = default;
};

struct GridTarget {
  GridCell cell;
  // Number of agents that must stand adjacent (Manhattan distance 1) at the
  // same time to capture the target.
  size_t required = 1;
};

struct GridCaptureSpec {
  size_t width = 3;
  size_t height = 3;
  std::vector<GridCell> agent_starts;
  std::vector<GridTarget> targets;
  size_t horizon = 0;  // 0 selects width + height.
  double gamma = 0.99;
};

// Grid pursuit game. Actions: 0 stay, 1 up, 2 down, 3 left, 4 right; target
// cells and walls block movement. Each capture pays 1 to the team. Episodes
// end at the horizon or when every target is captured. The state records
// agent cells, the captured mask and the elapsed step count.
DecPomdp MakeGridCapture(const GridCaptureSpec& spec);

// Random placement; odd-indexed targets require two agents when
// n_agents >= 2. Throws std::invalid_argument when the board cannot hold all
// entities.
DecPomdp MakeGridCapture(size_t width, size_t height, size_t n_agents,
                         size_t n_targets, uint64_t seed, size_t horizon = 0);

inline constexpr size_t kGridActions = 5;

}  // namespace maca::envs

#endif  // MACA_ENVS_GAMES_H_
