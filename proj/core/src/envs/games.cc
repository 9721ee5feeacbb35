#include "maca/envs/games.h"

#include <algorithm>
#include <map>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>

namespace maca::envs {

namespace {

std::vector<double> OneHot(size_t n, size_t k) {
  std::vector<double> v(n, 0.0);
  v[k] = 1.0;
  return v;
}

std::vector<double> AgentStateObservation(size_t n_agents, size_t agent,
                                          size_t n_states, size_t state) {
  std::vector<double> obs = OneHot(n_agents, agent);
  auto tag = OneHot(n_states, state);
  obs.insert(obs.end(), tag.begin(), tag.end());
  return obs;
}

}  // namespace

DecPomdp MakeSubsetGameFromTable(size_t n_agents, SubsetRewardTable table,
                                 const SubsetGameOptions& options) {
  if (n_agents == 0) throw std::invalid_argument("subset game: no agents");
  if (options.horizon == 0) throw std::invalid_argument("subset game: horizon");
  DecPomdpTables t;
  t.name = "subset_game";
  t.action_counts.assign(n_agents, options.num_actions);
  table.Validate(t.action_counts);
  t.num_states = options.horizon;
  t.initial = OneHot(t.num_states, 0);
  t.gamma = options.gamma;
  t.horizon = options.horizon;
  JointActionSpace space(t.action_counts);
  t.transitions.resize(t.num_states * space.size());
  for (size_t s = 0; s < t.num_states; ++s) {
    const size_t next = (s + 1) % t.num_states;
    for (size_t j = 0; j < space.size(); ++j) {
      t.transitions[s * space.size() + j] = {
          Transition{next, 1.0, table.Reward(space.At(j))}};
    }
    for (size_t i = 0; i < n_agents; ++i) {
      t.observations.push_back(
          AgentStateObservation(n_agents, i, t.num_states, s));
    }
  }
  t.terminal.assign(t.num_states, false);
  t.subset_rewards = std::move(table);
  return DecPomdp(std::move(t));
}

DecPomdp MakeSubsetGame(size_t n_agents, const std::vector<LevelSpec>& levels,
                        uint64_t seed, const SubsetGameOptions& options) {
  Rng rng(seed);
  std::vector<SubsetReward> entries;
  for (const LevelSpec& level : levels) {
    if (level.level < 1 || level.level > n_agents) {
      throw std::invalid_argument("subset game: level " +
                                  std::to_string(level.level) +
                                  " outside [1, " + std::to_string(n_agents) +
                                  "]");
    }
    if (level.reward_hi < level.reward_lo) {
      throw std::invalid_argument("subset game: empty reward range");
    }
    for (size_t c = 0; c < level.count; ++c) {
      std::vector<size_t> agents(n_agents);
      std::iota(agents.begin(), agents.end(), size_t{0});
      for (size_t k = 0; k < level.level; ++k) {
        std::swap(agents[k], agents[k + rng.Index(n_agents - k)]);
      }
      agents.resize(level.level);
      std::sort(agents.begin(), agents.end());
      std::vector<size_t> actions(level.level);
      for (size_t& a : actions) a = rng.Index(options.num_actions);
      entries.push_back(
          {std::move(agents), std::move(actions),
           rng.Uniform(level.reward_lo, level.reward_hi)});
    }
  }
  return MakeSubsetGameFromTable(n_agents, SubsetRewardTable(std::move(entries)),
                                 options);
}

DecPomdp MakeRandomGame(const std::vector<size_t>& action_counts, uint64_t seed,
                        const RandomGameOptions& options) {
  Rng rng(seed);
  DecPomdpTables t;
  t.name = "random_game";
  t.action_counts = action_counts;
  t.num_states = options.num_states;
  t.gamma = options.gamma;
  t.horizon = options.horizon;
  const size_t n = action_counts.size();
  const size_t ns = options.num_states;
  if (ns == 0) throw std::invalid_argument("random game: no states");
  t.initial.resize(ns);
  double total = 0.0;
  for (double& p : t.initial) total += (p = 0.1 + rng.Uniform());
  for (double& p : t.initial) p /= total;
  // Renormalize so the sum is exactly representable as 1 within tolerance.
  t.initial.back() = 1.0 - std::accumulate(t.initial.begin(), t.initial.end() - 1, 0.0);

  JointActionSpace space(action_counts);
  t.transitions.resize(ns * space.size());
  for (auto& row : t.transitions) {
    const size_t succ =
        options.deterministic ? 1 : std::min(ns, std::max<size_t>(1, options.max_successors));
    std::vector<size_t> targets(ns);
    std::iota(targets.begin(), targets.end(), size_t{0});
    for (size_t k = 0; k < succ; ++k) {
      std::swap(targets[k], targets[k + rng.Index(ns - k)]);
    }
    double mass = 0.0;
    for (size_t k = 0; k < succ; ++k) {
      const double w = 0.1 + rng.Uniform();
      row.push_back({targets[k], w, rng.Uniform()});
      mass += w;
    }
    for (auto& tr : row) tr.probability /= mass;
    double head = 0.0;
    for (size_t k = 0; k + 1 < row.size(); ++k) head += row[k].probability;
    row.back().probability = 1.0 - head;
  }
  for (size_t s = 0; s < ns; ++s) {
    for (size_t i = 0; i < n; ++i) {
      t.observations.push_back(AgentStateObservation(n, i, ns, s));
    }
  }
  t.terminal.assign(ns, false);
  return DecPomdp(std::move(t));
}

namespace {

struct GridState {
  std::vector<GridCell> agents;
  std::vector<bool> captured;
  size_t t = 0;

  auto Key() const {
    std::vector<size_t> key;
    for (const GridCell& c : agents) {
      key.push_back(c.x);
      key.push_back(c.y);
    }
    for (bool b : captured) key.push_back(b ? 1 : 0);
    key.push_back(t);
    return key;
  }
};

size_t ManhattanDistance(const GridCell& a, const GridCell& b) {
  const size_t dx = a.x > b.x ? a.x - b.x : b.x - a.x;
  const size_t dy = a.y > b.y ? a.y - b.y : b.y - a.y;
  return dx + dy;
}

}  // namespace

DecPomdp MakeGridCapture(const GridCaptureSpec& spec) {
  const size_t w = spec.width, h = spec.height;
  const size_t n = spec.agent_starts.size();
  if (w == 0 || h == 0) throw std::invalid_argument("grid capture: empty board");
  if (n == 0) throw std::invalid_argument("grid capture: no agents");
  if (spec.targets.empty()) throw std::invalid_argument("grid capture: no targets");
  const size_t horizon = spec.horizon == 0 ? w + h : spec.horizon;
  auto inside = [&](const GridCell& c) { return c.x < w && c.y < h; };
  auto is_target = [&](const GridCell& c) {
    return std::any_of(spec.targets.begin(), spec.targets.end(),
                       [&](const GridTarget& t) { return t.cell == c; });
  };
  for (size_t k = 0; k < spec.targets.size(); ++k) {
    const GridTarget& tg = spec.targets[k];
    if (!inside(tg.cell)) throw std::invalid_argument("grid capture: target off board");
    if (tg.required == 0 || tg.required > n) {
      throw std::invalid_argument("grid capture: target " + std::to_string(k) +
                                  " needs " + std::to_string(tg.required) +
                                  " agents, only " + std::to_string(n) +
                                  " available");
    }
    for (size_t m = 0; m < k; ++m) {
      if (spec.targets[m].cell == tg.cell) {
        throw std::invalid_argument("grid capture: overlapping targets");
      }
    }
  }
  for (const GridCell& c : spec.agent_starts) {
    if (!inside(c) || is_target(c)) {
      throw std::invalid_argument("grid capture: infeasible agent placement");
    }
  }

  const std::vector<size_t> counts(n, kGridActions);
  JointActionSpace space(counts);
  auto move = [&](const GridCell& c, size_t action) {
    GridCell next = c;
    switch (action) {
      case 1: if (c.y > 0) --next.y; break;
      case 2: if (c.y + 1 < h) ++next.y; break;
      case 3: if (c.x > 0) --next.x; break;
      case 4: if (c.x + 1 < w) ++next.x; break;
      default: break;
    }
    return is_target(next) ? c : next;
  };

  std::map<std::vector<size_t>, size_t> index;
  std::vector<GridState> states;
  std::queue<size_t> frontier;
  auto intern = [&](GridState st) {
    auto key = st.Key();
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    const size_t id = states.size();
    index.emplace(std::move(key), id);
    states.push_back(std::move(st));
    frontier.push(id);
    return id;
  };
  intern(GridState{spec.agent_starts,
                   std::vector<bool>(spec.targets.size(), false), 0});

  auto all_captured = [](const GridState& st) {
    return std::all_of(st.captured.begin(), st.captured.end(),
                       [](bool b) { return b; });
  };

  std::vector<std::vector<Transition>> rows;
  while (!frontier.empty()) {
    const size_t id = frontier.front();
    frontier.pop();
    const GridState cur = states[id];
    if (rows.size() < states.size()) rows.resize(states.size() * space.size());
    const bool stop = cur.t >= horizon || all_captured(cur);
    for (size_t j = 0; j < space.size(); ++j) {
      if (stop) {
        rows[id * space.size() + j] = {Transition{id, 1.0, 0.0}};
        continue;
      }
      const JointAction joint = space.At(j);
      GridState next = cur;
      next.t = cur.t + 1;
      for (size_t i = 0; i < n; ++i) next.agents[i] = move(cur.agents[i], joint[i]);
      double reward = 0.0;
      for (size_t k = 0; k < spec.targets.size(); ++k) {
        if (next.captured[k]) continue;
        size_t adjacent = 0;
        for (const GridCell& c : next.agents) {
          if (ManhattanDistance(c, spec.targets[k].cell) == 1) ++adjacent;
        }
        if (adjacent >= spec.targets[k].required) {
          next.captured[k] = true;
          reward += 1.0;
        }
      }
      const size_t next_id = intern(std::move(next));
      if (rows.size() < states.size() * space.size()) {
        rows.resize(states.size() * space.size());
      }
      rows[id * space.size() + j] = {Transition{next_id, 1.0, reward}};
    }
  }
  rows.resize(states.size() * space.size());

  DecPomdpTables t;
  t.name = "grid_capture";
  t.action_counts = counts;
  t.num_states = states.size();
  t.initial.assign(states.size(), 0.0);
  t.initial[0] = 1.0;
  t.transitions = std::move(rows);
  t.gamma = spec.gamma;
  t.horizon = horizon;
  const double sx = w > 1 ? 1.0 / static_cast<double>(w - 1) : 1.0;
  const double sy = h > 1 ? 1.0 / static_cast<double>(h - 1) : 1.0;
  for (const GridState& st : states) {
    t.terminal.push_back(all_captured(st) || st.t >= horizon);
    for (size_t i = 0; i < n; ++i) {
      const GridCell& c = st.agents[i];
      std::vector<double> obs = {static_cast<double>(c.x) * sx,
                                 static_cast<double>(c.y) * sy};
      for (size_t k = 0; k < spec.targets.size(); ++k) {
        const GridCell& tc = spec.targets[k].cell;
        obs.push_back((static_cast<double>(tc.x) - static_cast<double>(c.x)) * sx);
        obs.push_back((static_cast<double>(tc.y) - static_cast<double>(c.y)) * sy);
        obs.push_back(st.captured[k] ? 1.0 : 0.0);
      }
      obs.push_back(static_cast<double>(horizon - std::min(st.t, horizon)) /
                    static_cast<double>(horizon));
      t.observations.push_back(std::move(obs));
    }
  }
  return DecPomdp(std::move(t));
}

DecPomdp MakeGridCapture(size_t width, size_t height, size_t n_agents,
                         size_t n_targets, uint64_t seed, size_t horizon) {
  const size_t cells = width * height;
  if (n_agents == 0 || n_targets == 0 || n_agents + n_targets > cells) {
    throw std::invalid_argument(
        "grid capture: " + std::to_string(n_agents) + " agents and " +
        std::to_string(n_targets) + " targets do not fit a " +
        std::to_string(width) + "x" + std::to_string(height) + " board");
  }
  Rng rng(seed);
  std::vector<size_t> order(cells);
  std::iota(order.begin(), order.end(), size_t{0});
  for (size_t k = 0; k < n_agents + n_targets; ++k) {
    std::swap(order[k], order[k + rng.Index(cells - k)]);
  }
  GridCaptureSpec spec;
  spec.width = width;
  spec.height = height;
  spec.horizon = horizon;
  for (size_t k = 0; k < n_targets; ++k) {
    const size_t c = order[k];
    spec.targets.push_back(
        {{c % width, c / width}, (k % 2 == 1 && n_agents >= 2) ? size_t{2} : size_t{1}});
  }
  for (size_t k = 0; k < n_agents; ++k) {
    const size_t c = order[n_targets + k];
    spec.agent_starts.push_back({c % width, c / width});
  }
  return MakeGridCapture(spec);
}

}  // namespace maca::envs
