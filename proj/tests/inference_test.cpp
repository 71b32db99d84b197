#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "siftom/harness.hpp"
#include "siftom/inference.hpp"
#include "support.hpp"

namespace siftom {
namespace {

using testing::container;
using testing::object_class;
using testing::surface;

// An apple and a plate on the counter; goals put one of them on the table.
WorldState two_item_world() {
  SceneSpec s;
  s.classes = {object_class("apple", Category::food), object_class("plate", Category::dish)};
  s.locations = {surface("counter"), surface("kitchentable"), container("fridge", true, true)};
  s.objects = {{"apple1", "apple", "counter"}, {"plate1", "plate", "counter"}};
  s.human_start = "counter";
  s.robot_start = "counter";
  return WorldState::from_scene(s);
}

GoalSpace two_goal_space() {
  return GoalSpace::uniform({GoalSpec::make(TaskFamily::put_groceries, parse_predicate_set("on(apple, kitchentable, 1)")),
                             GoalSpec::make(TaskFamily::put_groceries, parse_predicate_set("on(plate, kitchentable, 1)"))});
}

TEST(Inference, EmptyHistoryLikelihoodIsOne) {
  ActionHistory h(two_item_world(), {});
  EXPECT_EQ(action_likelihood(h, parse_predicate_set("on(apple, kitchentable, 1)"), PlannerConfig{}), 1.0);
}

TEST(Inference, HistoryReplay) {
  auto s = two_item_world();
  const auto apple = *s.layout().find_object("apple1");
  ActionHistory h(s, {Action::grab(Agent::human, apple)});
  ASSERT_EQ(h.states().size(), 2u);
  EXPECT_TRUE(h.current_state().place(apple).in_hand);
  EXPECT_THROW(ActionHistory(s, {Action::put(Agent::human, apple, 1)}), IllegalAction);
}

TEST(Inference, OptimalHistoryNearOneAtLowTemperature) {
  auto s = two_item_world();
  const auto& L = s.layout();
  const auto goal = parse_predicate_set("on(apple, kitchentable, 1)");
  ActionHistory h(s, {Action::grab(Agent::human, *L.find_object("apple1")),
                      Action::walk_to(Agent::human, *L.find_location("kitchentable"))});
  PlannerConfig cold;
  cold.temperature = 0.05;
  EXPECT_GT(action_likelihood(h, goal, cold), 0.999);
  EXPECT_NEAR(action_likelihood(h, goal, cold), testing::oracle_likelihood(h, goal, cold), 1e-12);
  // Scored against the goal it moves away from.
  EXPECT_LT(action_likelihood(h, parse_predicate_set("on(plate, kitchentable, 1)"), PlannerConfig{}),
            action_likelihood(h, goal, PlannerConfig{}));
}

TEST(Inference, SingleGoalSpaceIsCertain) {
  auto s = two_item_world();
  GoalSpace space = GoalSpace::uniform({GoalSpec::make(TaskFamily::put_groceries, parse_predicate_set("on(apple, kitchentable, 1)"))});
  ActionHistory h(s, {Action::grab(Agent::human, *s.layout().find_object("plate1"))});
  auto post = goal_posterior(h, space, PlannerConfig{});
  ASSERT_EQ(post.size(), 1u);
  EXPECT_EQ(post.entries()[0].second, 1.0);
}

TEST(Inference, EmptyHistoryRecoversPrior) {
  auto space = two_goal_space();
  space.prior = {0.3, 0.7};
  auto post = goal_posterior(ActionHistory(two_item_world(), {}), space, PlannerConfig{});
  EXPECT_EQ(post.probability(space.goals[0].id), 0.3);
  EXPECT_EQ(post.probability(space.goals[1].id), 0.7);
}

TEST(Inference, GrabShiftsMassTowardItsGoal) {
  auto s = two_item_world();
  auto space = two_goal_space();
  ActionHistory h(s, {Action::grab(Agent::human, *s.layout().find_object("apple1"))});
  auto post = goal_posterior(h, space, PlannerConfig{});
  const auto& apple_goal = space.goals[0].id;
  EXPECT_GT(post.probability(apple_goal), 0.5);
  auto oracle = testing::oracle_goal_posterior({space, h}, PlannerConfig{});
  for (const auto& [id, p] : oracle) EXPECT_NEAR(post.probability(id), p, 1e-9);
}

TEST(Inference, ZeroLikelihoodFallsBackToPrior) {
  auto s = two_item_world();
  // Goals naming absent classes: every likelihood is zero.
  auto space = GoalSpace::uniform({GoalSpec::make(TaskFamily::put_groceries, parse_predicate_set("on(salmon, kitchentable, 1)")),
                                   GoalSpec::make(TaskFamily::put_groceries, parse_predicate_set("on(pudding, kitchentable, 1)"))});
  ActionHistory h(s, {Action::walk_to(Agent::human, *s.layout().find_location("fridge"))});
  auto post = goal_posterior(h, space, PlannerConfig{});
  EXPECT_NEAR(post.probability(space.goals[0].id), 0.5, 1e-15);
  auto sub = subgoal_posterior(h, space, PlannerConfig{}, 3, 5);
  EXPECT_EQ(sub.size(), 2u);
}

TEST(Inference, TopK) {
  auto t = PosteriorTable<std::string>::from_weights({{"A", 0.5}, {"B", 0.3}, {"C", 0.2}});
  auto top = top_k(t, 2);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0].first, "A");
  EXPECT_EQ(top[1].first, "B");
  EXPECT_EQ(top_k(t, 10).size(), 3u);
  auto u = PosteriorTable<std::string>::uniform({"z", "b", "m"});
  auto tu = top_k(u, 2);
  EXPECT_EQ(tu[0].first, "b");
  EXPECT_EQ(tu[1].first, "m");
  EXPECT_THROW(top_k(t, 0), std::invalid_argument);
}

TEST(Inference, SingleDelegationIsCertain) {
  auto s = two_item_world();
  GoalSpace space = GoalSpace::uniform({GoalSpec::make(TaskFamily::put_groceries, parse_predicate_set("on(apple, kitchentable, 1)"))});
  auto post = subgoal_posterior(ActionHistory(s, {}), space, PlannerConfig{}, 3, 5);
  ASSERT_EQ(post.size(), 1u);
  EXPECT_EQ(post.entries()[0].first, parse_predicate_set("on(apple, kitchentable, 1)"));
  EXPECT_DOUBLE_EQ(post.entries()[0].second, 1.0);
}

TEST(Inference, SharedDelegationHasHighestMarginal) {
  auto s = two_item_world();
  // Both goals contain the apple slot; only it is shared.
  auto space = GoalSpace::uniform(
      {GoalSpec::make(TaskFamily::put_groceries, parse_predicate_set("on(apple, kitchentable, 1) & on(plate, kitchentable, 1)")),
       GoalSpec::make(TaskFamily::put_groceries, parse_predicate_set("on(apple, kitchentable, 1)"))});
  auto post = subgoal_posterior(ActionHistory(s, {}), space, PlannerConfig{}, 3, 10);
  EXPECT_EQ(post.argmax(), parse_predicate_set("on(apple, kitchentable, 1)"));
  // Hand-summed: 0.5 * 1/3 + 0.5 * 1 = 2/3 for the apple share.
  EXPECT_NEAR(post.probability(parse_predicate_set("on(apple, kitchentable, 1)")), 2.0 / 3.0, 1e-12);
}

TEST(Inference, TruncatesToN) {
  auto s = two_item_world();
  auto space = GoalSpace::uniform(
      {GoalSpec::make(TaskFamily::put_groceries, parse_predicate_set("on(apple, kitchentable, 1) & on(plate, kitchentable, 1)"))});
  auto post = subgoal_posterior(ActionHistory(s, {}), space, PlannerConfig{}, 3, 2);
  EXPECT_EQ(post.size(), 2u);
  EXPECT_NEAR(post.total(), 1.0, 1e-12);
  EXPECT_THROW(subgoal_posterior(ActionHistory(s, {}), space, PlannerConfig{}, 3, 0), std::invalid_argument);
}

TEST(Inference, DemoRanksCerealAboveCoffee) {
  auto cfg = demo_scenario();
  auto prep = prepare(cfg);
  std::vector<Action> acts;
  for (const auto& a : cfg.history) acts.push_back(parse_action(a, Agent::human, prep.start.layout()));
  ActionHistory h(prep.start, acts);
  auto post = subgoal_posterior(h, prep.space, cfg.fusion.planner, cfg.fusion.k_goals, cfg.fusion.n_subgoals);
  const double cereal = post.probability(parse_predicate_set("on(cereal, diningtable, 1)"));
  const double coffee = post.probability(parse_predicate_set("on(coffee, diningtable, 1)"));
  EXPECT_GT(cereal, coffee);
  EXPECT_EQ(post.argmax(), parse_predicate_set("on(cereal, diningtable, 1)"));
}

// Brute-force Bayes over micro-worlds.
TEST(Inference, GoalPosteriorMatchesEnumeration) {
  Rng rng(31337);
  for (int i = 0; i < 60; ++i) {
    auto w = testing::random_micro_world(rng);
    PlannerConfig cfg;
    cfg.temperature = 0.5 + rng.uniform();
    auto post = goal_posterior(w.history, w.space, cfg);
    auto oracle = testing::oracle_goal_posterior(w, cfg);
    ASSERT_EQ(post.size(), oracle.size());
    for (const auto& [id, p] : oracle) EXPECT_NEAR(post.probability(id), p, 1e-9) << "world " << i;
  }
}

TEST(Inference, SubgoalPosteriorMatchesEnumeration) {
  Rng rng(4242);
  for (int i = 0; i < 40; ++i) {
    auto w = testing::random_micro_world(rng);
    PlannerConfig cfg;
    auto post = subgoal_posterior(w.history, w.space, cfg, 3, 100);
    auto oracle = testing::oracle_fused(w, cfg, nullptr);
    ASSERT_EQ(post.size(), oracle.size()) << "world " << i;
    for (const auto& [share, p] : oracle) EXPECT_NEAR(post.probability(share), p, 1e-9) << "world " << i;
  }
}

TEST(Inference, OptimalActionRaisesRank) {
  auto s = two_item_world();
  auto space = two_goal_space();
  const auto& L = s.layout();
  std::vector<Action> acts;
  auto rank_of_plate = [&] {
    auto post = goal_posterior(ActionHistory(s, acts), space, PlannerConfig{});
    auto ranked = post.ranked();
    return std::find_if(ranked.begin(), ranked.end(), [&](const auto& e) { return e.first == space.goals[1].id; }) -
           ranked.begin();
  };
  const auto before = rank_of_plate();
  acts.push_back(Action::grab(Agent::human, *L.find_object("plate1")));
  EXPECT_LE(rank_of_plate(), before);
  EXPECT_EQ(rank_of_plate(), 0);
}

}  // namespace
}  // namespace siftom
