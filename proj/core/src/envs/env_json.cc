#include "maca/envs/env_json.h"

#include <stdexcept>
#include <string>

#include "maca/envs/games.h"

namespace maca::envs {

using nlohmann::json;

namespace {

json TableToJson(const SubsetRewardTable& table) {
  json out = json::array();
  for (const SubsetReward& e : table.entries()) {
    out.push_back({{"agents", e.agents}, {"actions", e.actions}, {"reward", e.reward}});
  }
  return out;
}

SubsetRewardTable TableFromJson(const json& j) {
  std::vector<SubsetReward> entries;
  for (const json& e : j) {
    entries.push_back({e.at("agents").get<std::vector<size_t>>(),
                       e.at("actions").get<std::vector<size_t>>(),
                       e.at("reward").get<double>()});
  }
  return SubsetRewardTable(std::move(entries));
}

DecPomdp TabularFromJson(const json& doc) {
  DecPomdpTables t;
  t.name = doc.value("name", std::string("tabular"));
  t.action_counts = doc.at("actions").get<std::vector<size_t>>();
  t.num_states = doc.at("num_states").get<size_t>();
  t.gamma = doc.value("gamma", 0.99);
  t.horizon = doc.value("horizon", size_t{1});
  t.initial = doc.at("initial").get<std::vector<double>>();
  if (doc.contains("terminal")) {
    t.terminal = doc.at("terminal").get<std::vector<bool>>();
  }
  t.observations = doc.at("observations").get<std::vector<std::vector<double>>>();
  JointActionSpace space(t.action_counts);
  t.transitions.assign(t.num_states * space.size(), {});
  std::vector<bool> seen(t.transitions.size(), false);
  for (const json& row : doc.at("transitions")) {
    const size_t s = row.at("state").get<size_t>();
    const auto joint = row.at("joint").get<std::vector<size_t>>();
    if (s >= t.num_states || joint.size() != t.action_counts.size()) {
      throw std::invalid_argument("env json: malformed transition row");
    }
    size_t j = 0;
    for (size_t i = 0; i < joint.size(); ++i) {
      if (joint[i] >= t.action_counts[i]) {
        throw std::invalid_argument("env json: action out of range");
      }
      j = j * t.action_counts[i] + joint[i];
    }
    const size_t k = s * space.size() + j;
    if (seen[k]) throw std::invalid_argument("env json: duplicate transition row");
    seen[k] = true;
    for (const json& nx : row.at("next")) {
      t.transitions[k].push_back({nx.at("state").get<size_t>(), nx.at("p").get<double>(),
                                  nx.at("r").get<double>()});
    }
  }
  if (doc.contains("subset_table")) t.subset_rewards = TableFromJson(doc.at("subset_table"));
  return DecPomdp(std::move(t));
}

SubsetGameOptions SubsetOptions(const json& doc) {
  SubsetGameOptions o;
  o.num_actions = doc.value("num_actions", o.num_actions);
  o.horizon = doc.value("horizon", o.horizon);
  o.gamma = doc.value("gamma", o.gamma);
  return o;
}

}  // namespace

json ToJson(const DecPomdp& env) {
  const DecPomdpTables& t = env.tables();
  json out;
  out["kind"] = "tabular";
  out["name"] = t.name;
  out["actions"] = t.action_counts;
  out["num_states"] = t.num_states;
  out["gamma"] = t.gamma;
  out["horizon"] = t.horizon;
  out["initial"] = t.initial;
  out["terminal"] = t.terminal;
  out["observations"] = t.observations;
  json rows = json::array();
  for (size_t s = 0; s < t.num_states; ++s) {
    for (size_t j = 0; j < env.num_joint_actions(); ++j) {
      json next = json::array();
      for (const Transition& tr : env.Transitions(s, j)) {
        next.push_back({{"state", tr.next_state}, {"p", tr.probability}, {"r", tr.reward}});
      }
      rows.push_back({{"state", s}, {"joint", env.JointFromIndex(j)}, {"next", next}});
    }
  }
  out["transitions"] = std::move(rows);
  if (t.subset_rewards) out["subset_table"] = TableToJson(*t.subset_rewards);
  return out;
}

DecPomdp FromJson(const json& doc) {
  try {
    const std::string kind = doc.value("kind", std::string("tabular"));
    if (kind == "tabular") return TabularFromJson(doc);
    if (kind == "subset_game") {
      std::vector<LevelSpec> levels;
      for (const json& l : doc.at("levels")) {
        LevelSpec ls;
        ls.level = l.at("level").get<size_t>();
        ls.count = l.value("count", size_t{1});
        ls.reward_lo = l.value("reward_lo", 0.0);
        ls.reward_hi = l.value("reward_hi", 1.0);
        levels.push_back(ls);
      }
      return MakeSubsetGame(doc.at("n_agents").get<size_t>(), levels,
                            doc.value("seed", uint64_t{0}), SubsetOptions(doc));
    }
    if (kind == "subset_table") {
      return MakeSubsetGameFromTable(doc.at("n_agents").get<size_t>(),
                                     TableFromJson(doc.at("table")),
                                     SubsetOptions(doc));
    }
    if (kind == "grid_capture") {
      return MakeGridCapture(doc.at("width").get<size_t>(),
                             doc.at("height").get<size_t>(),
                             doc.at("n_agents").get<size_t>(),
                             doc.at("n_targets").get<size_t>(),
                             doc.value("seed", uint64_t{0}),
                             doc.value("horizon", size_t{0}));
    }
    if (kind == "random_game") {
      RandomGameOptions o;
      o.num_states = doc.value("num_states", o.num_states);
      o.horizon = doc.value("horizon", o.horizon);
      o.gamma = doc.value("gamma", o.gamma);
      o.deterministic = doc.value("deterministic", o.deterministic);
      return MakeRandomGame(doc.at("actions").get<std::vector<size_t>>(),
                            doc.value("seed", uint64_t{0}), o);
    }
    throw std::invalid_argument("env json: unknown kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("env json: ") + e.what());
  }
}

}  // namespace maca::envs
