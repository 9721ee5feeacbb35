#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "maca/envs/dec_pomdp.h"
#include "maca/envs/env_json.h"
#include "maca/envs/games.h"
#include "maca/envs/subset_reward_table.h"
#include "maca/envs/trajectory.h"
#include "maca/numerics/random.h"
#include "maca/oracle/oracle.h"

namespace maca::envs {
namespace {

// Brute-force table sum, written independently of SubsetRewardTable::Reward.
double SumMatchingEntries(const SubsetRewardTable& table,
                          const std::vector<size_t>& joint) {
  double total = 0.0;
  for (const SubsetReward& e : table.entries()) {
    bool match = true;
    for (size_t k = 0; k < e.agents.size(); ++k) {
      match = match && joint[e.agents[k]] == e.actions[k];
    }
    if (match) total += e.reward;
  }
  return total;
}

TEST(SubsetGameTest, SingleEntryPaysOnlyForMatchingAction) {
  const DecPomdp env = MakeSubsetGameFromTable(
      2, SubsetRewardTable({{{0}, {0}, 1.0}}), SubsetGameOptions{3, 1, 0.99});
  Rng rng(1);
  for (size_t a0 = 0; a0 < 3; ++a0) {
    for (size_t a1 = 0; a1 < 3; ++a1) {
      const std::vector<size_t> joint{a0, a1};
      const StepResult r = env.Step(env.Reset(rng), joint, rng);
      EXPECT_EQ(r.reward, a0 == 0 ? 1.0 : 0.0);
      EXPECT_TRUE(r.done);
    }
  }
}

TEST(SubsetGameTest, OverlappingLevelsShareAnAgent) {
  const DecPomdp env =
      MakeSubsetGame(3, {{1, 1, 0.0, 1.0}, {3, 1, 0.0, 1.0}}, 42);
  const auto& table = env.subset_rewards();
  ASSERT_TRUE(table.has_value());
  std::set<size_t> levels;
  for (const auto& e : table->entries()) levels.insert(e.agents.size());
  EXPECT_EQ(levels, (std::set<size_t>{1, 3}));
  // The 3-level subset contains every agent, so it overlaps the 1-level one.
  for (const auto& e : table->entries()) {
    for (double r : {e.reward}) {
      EXPECT_GE(r, 0.0);
      EXPECT_LE(r, 1.0);
    }
  }
}

TEST(SubsetGameTest, StepRewardEqualsTableSum) {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const DecPomdp env = MakeSubsetGame(
        3, {{1, 2, 0.0, 1.0}, {2, 2, 0.0, 1.0}, {3, 1, 0.0, 1.0}}, seed,
        SubsetGameOptions{3, 2, 0.99});
    const SubsetRewardTable& table = *env.subset_rewards();
    Rng rng(seed);
    for (size_t s = 0; s < env.num_states(); ++s) {
      for (const JointAction& joint : JointActionSpace(env.action_counts())) {
        const StepResult r = env.Step(EpisodeState{s, 0}, joint, rng);
        EXPECT_EQ(r.reward, table.Reward(joint));
        EXPECT_NEAR(r.reward, SumMatchingEntries(table, joint), 1e-15);
      }
    }
  }
}

TEST(SubsetGameTest, DeterministicPerSeed) {
  const std::vector<LevelSpec> levels{{1, 2, 0.0, 1.0}, {2, 2, 0.0, 1.0}};
  EXPECT_EQ(ToJson(MakeSubsetGame(3, levels, 5)), ToJson(MakeSubsetGame(3, levels, 5)));
  EXPECT_NE(ToJson(MakeSubsetGame(3, levels, 5)), ToJson(MakeSubsetGame(3, levels, 6)));
}

TEST(SubsetGameTest, LevelAboveAgentCountThrows) {
  EXPECT_THROW(MakeSubsetGame(2, {{3, 1, 0.0, 1.0}}, 0), std::invalid_argument);
  EXPECT_THROW(MakeSubsetGame(2, {{0, 1, 0.0, 1.0}}, 0), std::invalid_argument);
}

TEST(SubsetRewardTableTest, ValidateRejectsMalformedEntries) {
  const std::vector<size_t> counts{2, 2};
  EXPECT_THROW(SubsetRewardTable({{{}, {}, 1.0}}).Validate(counts), std::invalid_argument);
  EXPECT_THROW(SubsetRewardTable({{{0, 0}, {0, 1}, 1.0}}).Validate(counts),
               std::invalid_argument);
  EXPECT_THROW(SubsetRewardTable({{{2}, {0}, 1.0}}).Validate(counts), std::invalid_argument);
  EXPECT_THROW(SubsetRewardTable({{{0}, {2}, 1.0}}).Validate(counts), std::invalid_argument);
  EXPECT_NO_THROW(SubsetRewardTable({{{0, 1}, {1, 1}, 1.0}}).Validate(counts));
}

TEST(SubsetRewardTableTest, MaxRewardByBruteForce) {
  const SubsetRewardTable table({{{0}, {0}, 0.5}, {{0, 1}, {1, 1}, 1.0}});
  EXPECT_DOUBLE_EQ(table.MaxReward(std::vector<size_t>{2, 2}), 1.0);
}

TEST(StepTest, SingleStateDeterministicGameStaysPut) {
  const DecPomdp env = MakeRandomGame({2, 2}, 3, RandomGameOptions{1, 5, 0.9, 1, true});
  Rng rng(0);
  EpisodeState st = env.Reset(rng);
  for (size_t k = 0; k < 4; ++k) {
    const std::vector<size_t> joint{k % 2, (k / 2) % 2};
    const StepResult r = env.Step(st, joint, rng);
    EXPECT_EQ(r.next.state, st.state);
    EXPECT_FALSE(r.done);
    st = r.next;
  }
}

TEST(StepTest, HorizonEndsEpisode) {
  const DecPomdp env = MakeRandomGame({2}, 1, RandomGameOptions{3, 4, 0.9, 2, false});
  Rng rng(5);
  EpisodeState st = env.Reset(rng);
  const std::vector<size_t> joint{0};
  size_t steps = 0;
  bool done = false;
  while (!done) {
    const StepResult r = env.Step(st, joint, rng);
    done = r.done;
    st = r.next;
    ++steps;
  }
  EXPECT_LE(steps, 4u);
  EXPECT_EQ(st.t, steps);
}

TEST(StepTest, OutOfRangeActionThrows) {
  const DecPomdp env = MakeRandomGame({2, 3}, 1);
  Rng rng(0);
  const EpisodeState st = env.Reset(rng);
  EXPECT_THROW(env.Step(st, std::vector<size_t>{2, 0}, rng), std::out_of_range);
  EXPECT_THROW(env.Step(st, std::vector<size_t>{0}, rng), std::out_of_range);
  EXPECT_THROW(env.Step(EpisodeState{99, 0}, std::vector<size_t>{0, 0}, rng),
               std::out_of_range);
}

TEST(StepTest, NextStateFrequenciesMatchTransitions) {
  const DecPomdp env = MakeRandomGame({2, 2}, 17, RandomGameOptions{4, 3, 0.9, 4, false});
  const std::vector<size_t> joint{1, 0};
  const size_t j = env.JointIndex(joint);
  const int draws = 100000;
  for (size_t s = 0; s < env.num_states(); ++s) {
    Rng rng(100 + s);
    std::vector<double> counts(env.num_states(), 0.0);
    for (int k = 0; k < draws; ++k) {
      counts[env.Step(EpisodeState{s, 0}, joint, rng).next.state] += 1.0;
    }
    std::vector<double> expected(env.num_states(), 0.0);
    for (const Transition& tr : env.Transitions(s, j)) {
      expected[tr.next_state] += tr.probability;
    }
    for (size_t s2 = 0; s2 < env.num_states(); ++s2) {
      const double p = expected[s2];
      const double se = std::sqrt(p * (1.0 - p) / draws);
      EXPECT_LE(std::abs(counts[s2] / draws - p), 3.0 * se + 1e-12)
          << "s=" << s << " s'=" << s2;
    }
  }
}

TEST(StepTest, RewardMatchesDeclaredTransition) {
  const DecPomdp env = MakeRandomGame({2, 2}, 8, RandomGameOptions{3, 3, 0.9, 1, true});
  Rng rng(0);
  for (size_t s = 0; s < env.num_states(); ++s) {
    for (size_t j = 0; j < env.num_joint_actions(); ++j) {
      const auto tr = env.Transitions(s, j);
      ASSERT_EQ(tr.size(), 1u);
      const StepResult r = env.Step(EpisodeState{s, 0}, env.JointFromIndex(j), rng);
      EXPECT_EQ(r.reward, tr[0].reward);
      EXPECT_EQ(r.next.state, tr[0].next_state);
    }
  }
}

TEST(DecPomdpTest, RejectsBadTables) {
  DecPomdpTables t;
  t.action_counts = {2};
  t.num_states = 1;
  t.initial = {1.0};
  t.transitions = {{{0, 0.5, 0.0}}, {{0, 1.0, 0.0}}};
  t.observations = {{1.0}};
  t.terminal = {false};
  EXPECT_THROW(DecPomdp{t}, std::invalid_argument);
  t.transitions[0][0].probability = 1.0;
  EXPECT_NO_THROW(DecPomdp{t});
  t.gamma = 1.5;
  EXPECT_THROW(DecPomdp{t}, std::invalid_argument);
}

TEST(DecPomdpTest, TransitionRowsSumToOne) {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    const DecPomdp env = MakeRandomGame({2, 3}, seed, RandomGameOptions{5, 3, 0.9, 3, false});
    for (size_t s = 0; s < env.num_states(); ++s) {
      for (size_t j = 0; j < env.num_joint_actions(); ++j) {
        double total = 0.0;
        for (const Transition& tr : env.Transitions(s, j)) total += tr.probability;
        EXPECT_NEAR(total, 1.0, 1e-12);
      }
    }
  }
}

TEST(EnumerateTest, JointActionCounts) {
  EXPECT_EQ(Enumerate(MakeRandomGame({3, 3}, 0)).joint_actions.size(), 9u);
  EXPECT_EQ(Enumerate(MakeRandomGame({2, 2, 2}, 0)).joint_actions.size(), 8u);
}

TEST(EnumerateTest, ExhaustiveAndDuplicateFree) {
  const JointActionSpace space({2, 3, 2});
  std::set<JointAction> seen;
  size_t index = 0;
  for (const JointAction& a : space) {
    EXPECT_TRUE(seen.insert(a).second);
    EXPECT_EQ(space.Index(a), index++);
  }
  EXPECT_EQ(seen.size(), 12u);
  EXPECT_EQ(space.At(1), (JointAction{0, 0, 1}));
}

TEST(EnumerateTest, CapExceededNamesTheCap) {
  const DecPomdp env = MakeRandomGame({4, 4}, 0);
  try {
    Enumerate(env, 10);
    FAIL() << "expected std::length_error";
  } catch (const std::length_error& e) {
    EXPECT_NE(std::string(e.what()).find("10"), std::string::npos);
  }
}

TEST(GridCaptureTest, AdjacentTargetCapturedInOneStep) {
  GridCaptureSpec spec;
  spec.width = 3;
  spec.height = 1;
  spec.agent_starts = {{0, 0}};
  spec.targets = {{{1, 0}, 1}};
  const DecPomdp env = MakeGridCapture(spec);
  Rng rng(0);
  const StepResult r = env.Step(env.Reset(rng), std::vector<size_t>{0}, rng);
  EXPECT_EQ(r.reward, 1.0);
  EXPECT_TRUE(r.done);
  EXPECT_DOUBLE_EQ(oracle::OptimalValue(env), 1.0);
}

TEST(GridCaptureTest, TwoAgentTargetNeedsBoth) {
  GridCaptureSpec spec;
  spec.width = 3;
  spec.height = 3;
  spec.agent_starts = {{0, 1}, {0, 0}};
  spec.targets = {{{1, 1}, 2}};
  spec.horizon = 4;
  const DecPomdp env = MakeGridCapture(spec);
  Rng rng(0);
  // Agent 0 is adjacent, agent 1 stays put out of reach.
  const StepResult alone = env.Step(env.Reset(rng), std::vector<size_t>{0, 0}, rng);
  EXPECT_EQ(alone.reward, 0.0);
  EXPECT_FALSE(alone.done);
  // Agent 1 steps right to (1, 0), which is adjacent to the target.
  const StepResult both = env.Step(env.Reset(rng), std::vector<size_t>{0, 4}, rng);
  EXPECT_EQ(both.reward, 1.0);
  EXPECT_TRUE(both.done);
}

// Exhaustive search over joint action sequences using only Step().
double BruteForceOptimum(const DecPomdp& env, EpisodeState st, size_t depth) {
  if (depth == 0) return 0.0;
  Rng rng(0);
  double best = 0.0;
  for (const JointAction& joint : JointActionSpace(env.action_counts())) {
    const StepResult r = env.Step(st, joint, rng);
    const double value = r.reward + (r.done ? 0.0 : BruteForceOptimum(env, r.next, depth - 1));
    best = std::max(best, value);
  }
  return best;
}

TEST(GridCaptureTest, OptimalReturnMatchesExhaustiveSearch) {
  for (uint64_t seed = 0; seed < 3; ++seed) {
    const DecPomdp env = MakeGridCapture(3, 3, 2, 2, seed, 3);
    Rng rng(0);
    const EpisodeState start = env.Reset(rng);
    EXPECT_NEAR(oracle::OptimalValue(env), BruteForceOptimum(env, start, 3), 1e-12)
        << "seed " << seed;
  }
}

TEST(GridCaptureTest, ObservationDimensionIsFixed) {
  const DecPomdp env = MakeGridCapture(4, 3, 3, 2, 9);
  for (size_t s = 0; s < env.num_states(); ++s) {
    for (size_t i = 0; i < env.n_agents(); ++i) {
      EXPECT_EQ(env.Observation(s, i).size(), env.obs_dim());
    }
  }
}

TEST(GridCaptureTest, InfeasiblePlacementThrows) {
  EXPECT_THROW(MakeGridCapture(2, 2, 3, 2, 0), std::invalid_argument);
}

TEST(EnvJsonTest, RoundTripPreservesTables) {
  const std::vector<DecPomdp> envs = {
      MakeSubsetGame(3, {{1, 1, 0.0, 1.0}, {2, 2, 0.0, 1.0}}, 4),
      MakeRandomGame({2, 3}, 2, RandomGameOptions{3, 2, 0.9, 2, false}),
      MakeGridCapture(3, 3, 2, 1, 1)};
  for (const DecPomdp& env : envs) {
    const nlohmann::json j = ToJson(env);
    EXPECT_EQ(ToJson(FromJson(j)), j);
  }
}

TEST(EnvJsonTest, GeneratorFormMatchesDirectConstruction) {
  const nlohmann::json spec = {
      {"kind", "subset_table"}, {"n_agents", 2}, {"num_actions", 2},
      {"horizon", 1}, {"gamma", 0.99},
      {"table", {{{"agents", {0, 1}}, {"actions", {1, 1}}, {"reward", 1.0}}}}};
  const DecPomdp env = FromJson(spec);
  Rng rng(0);
  EXPECT_EQ(env.Step(env.Reset(rng), std::vector<size_t>{1, 1}, rng).reward, 1.0);
  EXPECT_EQ(env.Step(env.Reset(rng), std::vector<size_t>{1, 0}, rng).reward, 0.0);
  EXPECT_THROW(FromJson({{"kind", "nope"}}), std::invalid_argument);
}

TEST(EnvTest, SameSeedSameTrajectory) {
  const DecPomdp env = MakeRandomGame({2, 2}, 6, RandomGameOptions{4, 6, 0.9, 3, false});
  auto run = [&](uint64_t seed) {
    Rng rng(seed);
    std::vector<size_t> visited;
    EpisodeState st = env.Reset(rng);
    bool done = false;
    while (!done) {
      const std::vector<size_t> joint{rng.Index(2), rng.Index(2)};
      const StepResult r = env.Step(st, joint, rng);
      visited.push_back(r.next.state);
      st = r.next;
      done = r.done;
    }
    return visited;
  };
  EXPECT_EQ(run(3), run(3));
}

TEST(TrajectoryTest, ValidateRejectsBadPolicyRows) {
  TrajectoryBatch batch;
  StepRecord rec;
  rec.observations = {{1.0}, {0.0}};
  rec.actions = {0, 1};
  rec.policies = {{0.5, 0.5}, {0.2, 0.8}};
  rec.next_observations = rec.observations;
  rec.done = true;
  batch.steps.push_back(rec);
  EXPECT_NO_THROW(batch.Validate(2));
  EXPECT_THROW(batch.Validate(3), std::invalid_argument);
  batch.steps[0].done = false;
  EXPECT_THROW(batch.Validate(2), std::invalid_argument);
  batch.steps[0].done = true;
  batch.steps[0].policies[1] = {0.2, 0.7};
  EXPECT_THROW(batch.Validate(2), std::invalid_argument);
  batch.steps[0].policies[1] = {-0.2, 1.2};
  EXPECT_THROW(batch.Validate(2), std::invalid_argument);
}

}  // namespace
}  // namespace maca::envs
