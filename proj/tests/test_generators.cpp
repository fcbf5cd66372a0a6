#include <gtest/gtest.h>

#include <cmath>

#include "rrpi/error.hpp"
#include "rrpi/estimation.hpp"
#include "rrpi/generators.hpp"
#include "rrpi/random.hpp"
#include "rrpi/robust_dp.hpp"

using namespace rrpi;

TEST(RandomMdp, BranchingOneIsDeterministic) {
  RandomMdpSpec spec;
  spec.n_states = 6;
  spec.branching = 1;
  const auto inst = gen_random_mdp(spec);
  for (std::size_t s = 0; s < 6; ++s) {
    for (std::size_t a = 0; a < 2; ++a) {
      int ones = 0;
      for (double p : inst.kernel.row(s, a)) ones += p == 1.0;
      EXPECT_EQ(ones, 1);
    }
  }
}

TEST(RandomMdp, SameSeedSameInstance) {
  RandomMdpSpec spec;
  spec.seed = 99;
  const auto a = gen_random_mdp(spec);
  const auto b = gen_random_mdp(spec);
  EXPECT_EQ(a.kernel.probs, b.kernel.probs);
  EXPECT_EQ(a.mdp.reward, b.mdp.reward);
  spec.seed = 100;
  EXPECT_NE(gen_random_mdp(spec).kernel.probs, a.kernel.probs);
}

TEST(RandomMdp, ThousandInstancesValidate) {
  for (std::uint64_t k = 0; k < 1000; ++k) {
    RandomMdpSpec spec;
    spec.seed = k;
    spec.n_states = 1 + k % 9;
    spec.n_actions = 1 + k % 4;
    spec.branching = 1 + k % spec.n_states;
    spec.reward_min = -2.0;
    spec.reward_max = 3.0;
    const auto inst = gen_random_mdp(spec);
    const auto rep = validate_mdp(inst.mdp, inst.kernel);
    ASSERT_TRUE(rep.ok()) << rep.to_string();
    for (double r : inst.mdp.reward.data()) {
      EXPECT_GE(r, -2.0);
      EXPECT_LE(r, 3.0);
    }
  }
}

TEST(RandomMdp, InvalidSizes) {
  RandomMdpSpec spec;
  spec.branching = 9;
  EXPECT_THROW(gen_random_mdp(spec), InvalidInput);
  spec = {};
  spec.n_states = 0;
  EXPECT_THROW(gen_random_mdp(spec), InvalidInput);
}

TEST(RandomRobust, MemberZeroIsNominal) {
  RandomMdpSpec spec;
  spec.seed = 3;
  const auto nominal = gen_random_mdp(spec);
  const auto robust = gen_random_robust(spec, 4);
  EXPECT_EQ(robust.set.kernel_of_member(0).probs, nominal.kernel.probs);
  EXPECT_EQ(robust.set.max_member_count(), 4u);
  // Extra members stay on the nominal support.
  for (std::size_t s = 0; s < spec.n_states; ++s) {
    for (std::size_t t = 0; t < spec.n_states; ++t) {
      if (nominal.kernel.row(s, 1)[t] == 0.0) EXPECT_EQ(robust.set.member(s, 1, 3)[t], 0.0);
    }
  }
}

TEST(Gridworld, ZeroPerturbationHasIdenticalMembers) {
  GridworldSpec g;
  g.goals = {{3, 3}};
  g.hazards = {{1, 2}};
  const auto inst = gen_gridworld(g);
  const auto d = ensemble_disagreement(inst.set);
  for (double x : d.value.data()) EXPECT_EQ(x, 0.0);
}

TEST(Gridworld, ShortestPathValues) {
  GridworldSpec g;
  g.width = 2;
  g.height = 2;
  g.slip_prob = 0.0;
  g.n_members = 1;
  g.discount = 0.9;
  g.goals = {{1, 1}};
  g.goal_reward = 1.0;
  const auto inst = gen_gridworld(g);
  SolverConfig cfg;
  cfg.eps_inner = 1e-13;
  const auto opt = robust_value_iteration(inst.mdp, inst.set, cfg);
  // Goal pays on the step taken from it, so a cell d moves away is worth gamma^d.
  EXPECT_NEAR(opt.v[grid_state(g, {1, 1})], 1.0, 1e-10);
  EXPECT_NEAR(opt.v[grid_state(g, {1, 0})], 0.9, 1e-10);
  EXPECT_NEAR(opt.v[grid_state(g, {0, 1})], 0.9, 1e-10);
  EXPECT_NEAR(opt.v[grid_state(g, {0, 0})], 0.81, 1e-10);
  EXPECT_NEAR(opt.v[4], 0.0, 1e-12);
}

TEST(Gridworld, MembersValidWithWallsAndRegions) {
  GridworldSpec g;
  g.width = 5;
  g.height = 4;
  g.slip_prob = 0.3;
  g.perturbation = 0.1;
  g.n_members = 5;
  g.goals = {{4, 3}};
  g.hazards = {{2, 2}};
  g.walls = {{1, 1}, {3, 0}};
  g.regions = {{{1, 1}, {3, 2}, 0.25}};
  const auto inst = gen_gridworld(g);
  for (std::size_t m = 0; m < 5; ++m) {
    const auto rep = validate_mdp(inst.mdp, inst.set.kernel_of_member(m));
    EXPECT_TRUE(rep.ok()) << rep.to_string();
  }
  EXPECT_DOUBLE_EQ(g.perturbation_at({2, 2}), 0.25);
  EXPECT_DOUBLE_EQ(g.perturbation_at({0, 0}), 0.1);
  // Member slips are evenly spaced: -p, -p/2, 0, p/2, p.
  const auto s = grid_state(g, {0, 2});
  EXPECT_NEAR(inst.set.member(s, 1, 0)[grid_state(g, {1, 2})], 1.0 - 0.2, 1e-12);
  EXPECT_NEAR(inst.set.member(s, 1, 4)[grid_state(g, {1, 2})], 1.0 - 0.4, 1e-12);
}

TEST(Gridworld, InvalidSpecs) {
  GridworldSpec g;
  g.slip_prob = 0.95;
  g.perturbation = 0.1;
  EXPECT_THROW(gen_gridworld(g), InvalidInput);
  g = {};
  g.width = 0;
  EXPECT_THROW(gen_gridworld(g), InvalidInput);
  g = {};
  g.slip_prob = 0.05;
  g.perturbation = 0.1;
  EXPECT_THROW(gen_gridworld(g), InvalidInput);
}

TEST(StreamSeed, DistinctStreams) {
  EXPECT_NE(stream_seed(1, 0, 0), stream_seed(1, 0, 1));
  EXPECT_NE(stream_seed(1, 0, 1), stream_seed(1, 1, 0));
  EXPECT_EQ(stream_seed(5, 2, 3), stream_seed(5, 2, 3));
}
