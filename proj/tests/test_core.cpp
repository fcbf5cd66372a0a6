#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "rrpi/core.hpp"
#include "rrpi/error.hpp"
#include "rrpi/generators.hpp"

using namespace rrpi;

namespace {

FiniteMdp two_state_mdp() {
  FiniteMdp m;
  m.n_states = 2;
  m.n_actions = 2;
  m.reward = Table(2, 2, {1.0, 0.0, 0.0, 2.0});
  m.discount = 0.9;
  m.initial_dist = {0.5, 0.5};
  return m;
}

}  // namespace

TEST(ValidateMdp, WellFormedPasses) {
  const auto inst = fixture_m1();
  EXPECT_TRUE(validate_mdp(inst.mdp, inst.kernel).ok());
  EXPECT_NO_THROW(require_valid(inst.mdp, inst.kernel));
}

TEST(ValidateMdp, BadRowNamesStateAndAction) {
  auto inst = fixture_m1();
  inst.kernel.row(1, 0)[0] = 0.68;  // row sums to 0.98
  const auto rep = validate_mdp(inst.mdp, inst.kernel);
  ASSERT_EQ(rep.violations.size(), 1u);
  EXPECT_EQ(rep.violations[0].state, 1);
  EXPECT_EQ(rep.violations[0].action, 0);
  EXPECT_NE(rep.violations[0].what.find("kernel row invalid"), std::string::npos);
  EXPECT_THROW(require_valid(inst.mdp, inst.kernel), InvalidInput);
}

TEST(ValidateMdp, DiscountOne) {
  auto m = two_state_mdp();
  m.discount = 1.0;
  const auto rep = validate_mdp(m);
  ASSERT_FALSE(rep.ok());
  EXPECT_EQ(rep.violations[0].what, "discount out of range");
}

TEST(ValidateMdp, NegativeEntryAndShape) {
  auto inst = fixture_m1();
  inst.kernel.row(0, 1)[0] = -0.1;
  inst.kernel.row(0, 1)[1] = 1.1;
  EXPECT_FALSE(validate_mdp(inst.mdp, inst.kernel).ok());
  auto m = two_state_mdp();
  m.initial_dist = {1.0};
  EXPECT_FALSE(validate_mdp(m).ok());
  m = two_state_mdp();
  m.r_max = 1.5;
  EXPECT_FALSE(validate_mdp(m).ok());
}

TEST(UncertaintySet, RejectsBadMembers) {
  std::vector<std::vector<std::vector<double>>> members = {{{0.5, 0.5}}, {{0.3, 0.6}}};
  EXPECT_THROW(UncertaintySet(2, 1, members), InvalidInput);
  const auto rep = validate_members(2, 1, members);
  ASSERT_EQ(rep.violations.size(), 1u);
  EXPECT_EQ(rep.violations[0].state, 1);
  EXPECT_EQ(rep.violations[0].member, 0);
  members[1] = {};
  EXPECT_THROW(UncertaintySet(2, 1, members), InvalidInput);
}

TEST(UncertaintySet, RaggedListsAndKernels) {
  const UncertaintySet set(2, 1, {{{1.0, 0.0}, {0.5, 0.5}, {0.0, 1.0}}, {{0.2, 0.8}}});
  EXPECT_EQ(set.member_count(0, 0), 3u);
  EXPECT_EQ(set.member_count(1, 0), 1u);
  EXPECT_EQ(set.max_member_count(), 3u);
  EXPECT_EQ(set.total_members(), 4u);
  EXPECT_EQ(set.flat_index(1, 0, 0), 3u);
  const auto k = set.kernel_of_member(2);
  EXPECT_DOUBLE_EQ(k.row(0, 0)[1], 1.0);
  EXPECT_DOUBLE_EQ(k.row(1, 0)[1], 0.8);

  const auto m1 = fixture_m1();
  const auto single = UncertaintySet::singleton(m1.kernel);
  EXPECT_EQ(single.max_member_count(), 1u);
  EXPECT_EQ(single.kernel_of_member(0).probs, m1.kernel.probs);
}

TEST(LogPolicy, UniformRows) {
  FiniteMdp m = two_state_mdp();
  m.n_actions = 3;
  m.reward = Table(2, 3);
  const auto pi = uniform_policy(m);
  for (std::size_t s = 0; s < 2; ++s) {
    for (std::size_t a = 0; a < 3; ++a) EXPECT_NEAR(pi.log_prob(s, a), std::log(1.0 / 3.0), 1e-15);
  }
  m.n_actions = 1;
  m.reward = Table(2, 1);
  EXPECT_EQ(uniform_policy(m).log_prob(1, 0), 0.0);
}

TEST(LogPolicy, Validation) {
  EXPECT_THROW(LogPolicy(Table(1, 2, {std::log(0.5), std::log(0.4)})), InvalidInput);
  EXPECT_THROW(LogPolicy(Table(1, 2, {0.0, -INFINITY})), InvalidInput);
  EXPECT_THROW(LogPolicy::from_probs(Table(1, 2, {1.0, 0.0})), InvalidInput);
  const auto p = LogPolicy::from_unnormalized(Table(1, 2, {1000.0, 1000.0 + std::log(3.0)}));
  EXPECT_NEAR(p.prob(0, 0), 0.25, 1e-12);
  EXPECT_NEAR(p.prob(0, 1), 0.75, 1e-12);
  const auto hard = soften({1, 0}, 2);
  EXPECT_EQ(hard.prob(0, 1), 1.0);
  EXPECT_TRUE(std::isfinite(hard.log_prob(0, 0)));
}

TEST(ExactReturn, AbsorbingGeometricSeries) {
  FiniteMdp m;
  m.n_states = 1;
  m.n_actions = 1;
  m.reward = Table(1, 1, 1.0);
  m.discount = 0.9;
  m.initial_dist = {1.0};
  TransitionKernel k(1, 1);
  k.probs = {1.0};
  SolverConfig cfg;
  cfg.eps_inner = 1e-13;
  EXPECT_NEAR(exact_return(m, k, uniform_policy(m), cfg), 10.0, 1e-11);
}

TEST(ExactReturn, ZeroRewards) {
  auto inst = fixture_m1();
  inst.mdp.reward = Table(2, 2);
  EXPECT_EQ(exact_return(inst.mdp, inst.kernel, uniform_policy(inst.mdp)), 0.0);
}

TEST(ExactReturn, FixtureM1MatchesScalarOracle) {
  const auto inst = fixture_m1();
  const auto pi = uniform_policy(inst.mdp);
  oracle::Mat p(2, oracle::Vec(2, 0.0));
  oracle::Vec r(2, 0.0);
  for (std::size_t s = 0; s < 2; ++s) {
    for (std::size_t a = 0; a < 2; ++a) {
      r[s] += 0.5 * inst.mdp.reward(s, a);
      for (std::size_t t = 0; t < 2; ++t) p[s][t] += 0.5 * inst.kernel.row(s, a)[t];
    }
  }
  const auto v = oracle::scalar_policy_value(p, r, 0.9, 1e-13);
  const double expected = 0.5 * v[0] + 0.5 * v[1];
  EXPECT_NEAR(expected, 7.5, 1e-10);  // frozen
  SolverConfig cfg;
  cfg.eps_inner = 1e-13;
  EXPECT_NEAR(exact_return(inst.mdp, inst.kernel, pi, cfg), expected, 1e-10);
}

TEST(ExactReturn, NonConvergenceCarriesResidual) {
  const auto inst = fixture_m1();
  SolverConfig cfg;
  cfg.max_inner_iters = 3;
  try {
    exact_return(inst.mdp, inst.kernel, uniform_policy(inst.mdp), cfg);
    FAIL() << "expected NonConvergence";
  } catch (const NonConvergence& e) {
    EXPECT_EQ(e.iterations(), 3);
    EXPECT_GT(e.residual(), 0.0);
  }
}

TEST(SolverConfig, DefaultsAndValidation) {
  const auto inst = fixture_m1();
  const auto c = SolverConfig::driver_defaults(inst.mdp);
  EXPECT_DOUBLE_EQ(c.alpha, 0.2);
  ASSERT_TRUE(c.clip_bound.has_value());
  EXPECT_NEAR(*c.clip_bound, 20.0, 1e-12);
  SolverConfig bad;
  bad.alpha = 0.0;
  EXPECT_THROW(bad.validate(), InvalidInput);
  bad = {};
  bad.max_outer_iters = 0;
  EXPECT_THROW(bad.validate(), InvalidInput);
}
