#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "rrpi/error.hpp"
#include "rrpi/estimation.hpp"
#include "rrpi/generators.hpp"
#include "rrpi/random.hpp"

using namespace rrpi;

namespace {

OfflineDataset small_dataset() {
  OfflineDataset d;
  d.n_states = 2;
  d.n_actions = 2;
  d.transitions = {{0, 0, 0.0, 1}, {0, 0, 0.0, 1}, {0, 0, 0.0, 0}, {0, 0, 0.0, 1}};
  return d;
}

double mean_of(const Table& t) {
  double s = 0.0;
  for (double x : t.data()) s += x;
  return s / double(t.data().size());
}

TransitionKernel two_state_kernel() {
  TransitionKernel k(2, 1);
  k.probs = {0.3, 0.7, 0.85, 0.15};
  return k;
}

}  // namespace

TEST(MleKernel, FrequenciesAndUnseenRows) {
  const auto k = fit_mle_kernel(small_dataset());
  EXPECT_DOUBLE_EQ(k.row(0, 0)[0], 0.25);
  EXPECT_DOUBLE_EQ(k.row(0, 0)[1], 0.75);
  EXPECT_DOUBLE_EQ(k.row(1, 1)[0], 0.5);
  EXPECT_DOUBLE_EQ(k.row(0, 1)[1], 0.5);
}

TEST(MleKernel, EmptyDataset) {
  OfflineDataset d;
  d.n_states = 2;
  d.n_actions = 1;
  try {
    fit_mle_kernel(d);
    FAIL();
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("no transitions"), std::string::npos);
  }
}

TEST(MleKernel, OutOfRangeRejected) {
  auto d = small_dataset();
  d.transitions.push_back({0, 0, 0.0, 5});
  EXPECT_THROW(fit_mle_kernel(d), InvalidInput);
}

TEST(MleKernel, ConcentratesOnTrueKernel) {
  const auto truth = two_state_kernel();
  const auto d = sample_dataset(truth, 100000, 17);
  const auto k = fit_mle_kernel(d);
  for (std::size_t s = 0; s < 2; ++s) {
    const double tv = 0.5 * (std::abs(k.row(s, 0)[0] - truth.row(s, 0)[0]) +
                             std::abs(k.row(s, 0)[1] - truth.row(s, 0)[1]));
    EXPECT_LT(tv, 0.02);
  }
}

TEST(MleKernel, PermutationInvariant) {
  const auto inst = gen_random_mdp({});
  auto d = sample_dataset(inst.kernel, 2000, 4);
  const auto a = fit_mle_kernel(d);
  Rng rng(2);
  std::shuffle(d.transitions.begin(), d.transitions.end(), rng);
  EXPECT_EQ(fit_mle_kernel(d).probs, a.probs);
}

TEST(Ensemble, SingleMemberIsSingleton) {
  EnsembleSpec spec;
  spec.n_members = 1;
  const auto set = build_uncertainty_set(small_dataset(), spec);
  EXPECT_EQ(set.max_member_count(), 1u);
  EXPECT_EQ(set.total_members(), 4u);
}

TEST(Ensemble, DeterministicPerSeed) {
  const auto inst = gen_random_mdp({});
  const auto d = sample_dataset(inst.kernel, 300, 9);
  for (auto method : {EnsembleMethod::Dirichlet, EnsembleMethod::Bootstrap}) {
    EnsembleSpec spec;
    spec.method = method;
    spec.seed = 123;
    EXPECT_EQ(build_uncertainty_set(d, spec), build_uncertainty_set(d, spec));
    auto other = spec;
    other.seed = 124;
    EXPECT_FALSE(build_uncertainty_set(d, spec) == build_uncertainty_set(d, other));
  }
}

TEST(Ensemble, CoveredPairDisagreesLess) {
  OfflineDataset d;
  d.n_states = 2;
  d.n_actions = 2;
  Rng rng(3);
  std::bernoulli_distribution b(0.4);
  for (int i = 0; i < 10000; ++i) d.transitions.push_back({0, 0, 0.0, b(rng) ? 1u : 0u});
  d.transitions.push_back({1, 1, 0.0, 0});
  EnsembleSpec spec;
  spec.n_members = 8;
  const auto tv = pairwise_tv_disagreement(build_uncertainty_set(d, spec));
  EXPECT_GT(tv(0, 1), tv(0, 0));
  EXPECT_GT(tv(1, 1), tv(0, 0));
}

TEST(Ensemble, BootstrapRowsValidAndUnseenUniform) {
  EnsembleSpec spec;
  spec.method = EnsembleMethod::Bootstrap;
  spec.n_members = 6;
  const auto set = build_uncertainty_set(small_dataset(), spec);
  for (std::size_t m = 0; m < 6; ++m) {
    EXPECT_DOUBLE_EQ(set.member(1, 0, m)[0], 0.5);
    const auto r = set.member(0, 0, m);
    EXPECT_NEAR(r[0] + r[1], 1.0, 1e-15);
    EXPECT_DOUBLE_EQ(std::fmod(r[0] * 4.0, 1.0), 0.0);
  }
}

TEST(Ensemble, DirichletConverges) {
  const auto truth = gen_random_mdp({});
  EnsembleSpec spec;
  spec.n_members = 6;
  spec.seed = 5;
  const auto few = build_uncertainty_set(sample_dataset(truth.kernel, 100, 1), spec);
  const auto many = build_uncertainty_set(sample_dataset(truth.kernel, 100000, 1), spec);
  EXPECT_LT(mean_of(pairwise_tv_disagreement(many)), mean_of(pairwise_tv_disagreement(few)));
}

TEST(Ensemble, SpecValidation) {
  EnsembleSpec spec;
  spec.n_members = 0;
  EXPECT_THROW(spec.validate(), InvalidInput);
  EXPECT_THROW(parse_ensemble_method("gaussian"), InvalidInput);
  EXPECT_EQ(parse_ensemble_method("bootstrap"), EnsembleMethod::Bootstrap);
  EXPECT_EQ(to_string(EnsembleMethod::Dirichlet), "dirichlet");
}

TEST(Disagreement, IdenticalMembers) {
  const UncertaintySet one(2, 1, {{{0.2, 0.8}, {0.2, 0.8}}, {{1.0, 0.0}, {1.0, 0.0}}});
  const auto d = ensemble_disagreement(one);
  EXPECT_EQ(d.value(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(d.log_value(0, 0), std::log(1e-12));
  EXPECT_EQ(pairwise_tv_disagreement(one)(1, 0), 0.0);
}

TEST(Disagreement, OppositeMembers) {
  const UncertaintySet set(2, 1, {{{1.0, 0.0}, {0.0, 1.0}}, {{0.5, 0.5}}});
  const auto d = ensemble_disagreement(set);
  EXPECT_DOUBLE_EQ(d.value(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(d.log_value(0, 0), std::log(0.5));
  EXPECT_DOUBLE_EQ(pairwise_tv_disagreement(set)(0, 0), 1.0);
}

TEST(Disagreement, FixtureE1MatchesOracle) {
  // E1: 3 states, 1 action, three members per pair.
  const std::vector<std::vector<std::vector<double>>> e1 = {
      {{0.2, 0.3, 0.5}, {0.1, 0.6, 0.3}, {0.4, 0.4, 0.2}},
      {{1.0, 0.0, 0.0}, {0.9, 0.05, 0.05}, {0.7, 0.2, 0.1}},
      {{0.25, 0.25, 0.5}, {0.3, 0.3, 0.4}, {0.05, 0.05, 0.9}},
  };
  const UncertaintySet set(3, 1, e1);
  const auto d = ensemble_disagreement(set);
  for (std::size_t s = 0; s < 3; ++s) {
    double acc = 0.0;
    for (std::size_t t = 0; t < 3; ++t) {
      oracle::Vec col;
      for (const auto& m : e1[s]) col.push_back(m[t]);
      acc += oracle::pop_std(col);
    }
    EXPECT_NEAR(d.value(s, 0), acc / 3.0, 1e-15);
  }
}

TEST(Dataset, SampleValidates) {
  const auto d = sample_dataset(two_state_kernel(), 50, 1);
  EXPECT_EQ(d.transitions.size(), 50u);
  EXPECT_NO_THROW(d.validate());
  const auto c = d.counts();
  std::uint64_t total = 0;
  for (auto x : c) total += x;
  EXPECT_EQ(total, 50u);
}
