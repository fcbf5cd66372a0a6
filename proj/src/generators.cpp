#include "rrpi/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rrpi/error.hpp"
#include "rrpi/random.hpp"

namespace rrpi {

void RandomMdpSpec::validate() const {
  if (n_states == 0 || n_actions == 0) throw InvalidInput("random MDP: sizes must be positive");
  if (branching == 0 || branching > n_states) {
    throw InvalidInput("random MDP: branching must be in [1, n_states]");
  }
  if (!(reward_min <= reward_max) || !std::isfinite(reward_min) || !std::isfinite(reward_max)) {
    throw InvalidInput("random MDP: invalid reward range");
  }
  if (!(discount > 0.0 && discount < 1.0)) throw InvalidInput("random MDP: discount out of range");
}

namespace {

std::vector<std::size_t> random_support(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<double> dirichlet_on(const std::vector<std::size_t>& support, std::size_t n, Rng& rng) {
  std::vector<double> row(n, 0.0);
  std::exponential_distribution<double> expo(1.0);
  double total = 0.0;
  for (auto t : support) {
    // Exp(1) floors away from 0 so rows keep their full declared support.
    row[t] = expo(rng) + 1e-12;
    total += row[t];
  }
  for (auto t : support) row[t] /= total;
  return row;
}

}  // namespace

MdpInstance gen_random_mdp(const RandomMdpSpec& spec) {
  spec.validate();
  const auto S = spec.n_states;
  const auto A = spec.n_actions;
  Rng rng(stream_seed(spec.seed, 0));
  std::uniform_real_distribution<double> reward(spec.reward_min, spec.reward_max);

  MdpInstance out;
  out.mdp.n_states = S;
  out.mdp.n_actions = A;
  out.mdp.discount = spec.discount;
  out.mdp.reward = Table(S, A);
  for (double& r : out.mdp.reward.data()) r = spec.reward_min == spec.reward_max ? spec.reward_min : reward(rng);
  out.mdp.initial_dist.assign(S, 1.0 / double(S));
  out.mdp.r_max = std::max(std::abs(spec.reward_min), std::abs(spec.reward_max));

  out.kernel = TransitionKernel(S, A);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      const auto support = random_support(S, spec.branching, rng);
      const auto row = dirichlet_on(support, S, rng);
      std::copy(row.begin(), row.end(), out.kernel.row(s, a).begin());
    }
  }
  return out;
}

RobustInstance gen_random_robust(const RandomMdpSpec& spec, std::size_t n_members) {
  if (n_members < 1) throw InvalidInput("random robust instance: n_members must be >= 1");
  auto base = gen_random_mdp(spec);
  const auto S = spec.n_states;
  const auto A = spec.n_actions;
  Rng rng(stream_seed(spec.seed, 1));
  std::vector<std::vector<std::vector<double>>> members(S * A);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      auto nominal = base.kernel.row(s, a);
      std::vector<std::size_t> support;
      for (std::size_t t = 0; t < S; ++t) {
        if (nominal[t] > 0.0) support.push_back(t);
      }
      auto& list = members[s * A + a];
      list.emplace_back(nominal.begin(), nominal.end());
      for (std::size_t m = 1; m < n_members; ++m) list.push_back(dirichlet_on(support, S, rng));
    }
  }
  return {std::move(base.mdp), UncertaintySet(S, A, std::move(members))};
}

// ---------------------------------------------------------------------------
// Gridworld

void GridworldSpec::validate() const {
  if (width == 0 || height == 0) throw InvalidInput("gridworld: width and height must be positive");
  if (n_members < 1) throw InvalidInput("gridworld: n_members must be >= 1");
  if (!(discount > 0.0 && discount < 1.0)) throw InvalidInput("gridworld: discount out of range");
  auto in_grid = [&](GridCell c) { return c.x < width && c.y < height; };
  auto check_slip = [&](double pert) {
    if (!(pert >= 0.0)) throw InvalidInput("gridworld: perturbation must be >= 0");
    if (!(slip_prob - pert >= 0.0 && slip_prob + pert < 1.0)) {
      throw InvalidInput("gridworld: slip_prob +/- perturbation must stay in [0, 1)");
    }
  };
  check_slip(perturbation);
  for (const auto& r : regions) {
    if (!in_grid(r.lo) || !in_grid(r.hi) || r.lo.x > r.hi.x || r.lo.y > r.hi.y) {
      throw InvalidInput("gridworld: region out of bounds");
    }
    check_slip(r.perturbation);
  }
  for (const auto* cells : {&goals, &hazards, &walls}) {
    for (auto c : *cells) {
      if (!in_grid(c)) throw InvalidInput("gridworld: cell out of bounds");
    }
  }
  if (!in_grid(start)) throw InvalidInput("gridworld: start out of bounds");
  if (std::find(walls.begin(), walls.end(), start) != walls.end()) {
    throw InvalidInput("gridworld: start is a wall");
  }
  if (!std::isfinite(goal_reward) || !std::isfinite(hazard_reward)) {
    throw InvalidInput("gridworld: rewards must be finite");
  }
}

double GridworldSpec::perturbation_at(GridCell c) const {
  double p = perturbation;
  for (const auto& r : regions) {
    if (c.x >= r.lo.x && c.x <= r.hi.x && c.y >= r.lo.y && c.y <= r.hi.y) p = r.perturbation;
  }
  return p;
}

std::size_t grid_state(const GridworldSpec& spec, GridCell c) { return c.y * spec.width + c.x; }

RobustInstance gen_gridworld(const GridworldSpec& spec) {
  spec.validate();
  const auto W = spec.width;
  const auto H = spec.height;
  const auto S = W * H + 1;
  const auto sink = W * H;
  const auto A = kGridActions;

  auto contains = [](const std::vector<GridCell>& v, GridCell c) {
    return std::find(v.begin(), v.end(), c) != v.end();
  };
  auto is_wall = [&](GridCell c) { return contains(spec.walls, c); };

  auto step = [&](GridCell c, std::size_t dir) -> std::size_t {
    long x = long(c.x), y = long(c.y);
    switch (dir) {
      case 0: --y; break;
      case 1: ++x; break;
      case 2: ++y; break;
      default: --x; break;
    }
    if (x < 0 || y < 0 || x >= long(W) || y >= long(H)) return grid_state(spec, c);
    const GridCell n{std::size_t(x), std::size_t(y)};
    return is_wall(n) ? grid_state(spec, c) : grid_state(spec, n);
  };

  FiniteMdp mdp;
  mdp.n_states = S;
  mdp.n_actions = A;
  mdp.discount = spec.discount;
  mdp.reward = Table(S, A);
  mdp.initial_dist.assign(S, 0.0);
  mdp.initial_dist[grid_state(spec, spec.start)] = 1.0;

  std::vector<std::vector<std::vector<double>>> members(S * A);
  const auto N = spec.n_members;
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      const GridCell c{x, y};
      const auto s = grid_state(spec, c);
      const bool goal = contains(spec.goals, c);
      const bool hazard = !goal && contains(spec.hazards, c);
      const double pert = spec.perturbation_at(c);
      for (std::size_t a = 0; a < A; ++a) {
        auto& list = members[s * A + a];
        std::vector<double> row(S, 0.0);
        if (is_wall(c)) {
          row[s] = 1.0;
          list.assign(N, row);
          continue;
        }
        if (goal || hazard) {
          mdp.reward(s, a) = goal ? spec.goal_reward : spec.hazard_reward;
          row[sink] = 1.0;
          list.assign(N, row);
          continue;
        }
        for (std::size_t m = 0; m < N; ++m) {
          const double delta =
              N == 1 ? 0.0 : pert * (2.0 * double(m) / double(N - 1) - 1.0);
          const double slip = spec.slip_prob + delta;
          std::fill(row.begin(), row.end(), 0.0);
          row[step(c, a)] += 1.0 - slip;
          row[step(c, (a + 1) % 4)] += 0.5 * slip;
          row[step(c, (a + 3) % 4)] += 0.5 * slip;
          list.push_back(row);
        }
      }
    }
  }
  for (std::size_t a = 0; a < A; ++a) {
    std::vector<double> row(S, 0.0);
    row[sink] = 1.0;
    members[sink * A + a].assign(N, row);
  }
  double r = std::max(std::abs(spec.goal_reward), spec.hazards.empty() ? 0.0 : std::abs(spec.hazard_reward));
  mdp.r_max = r;
  return {std::move(mdp), UncertaintySet(S, A, std::move(members))};
}

// ---------------------------------------------------------------------------
// Fixtures

MdpInstance fixture_m1() {
  MdpInstance out;
  out.mdp.n_states = 2;
  out.mdp.n_actions = 2;
  out.mdp.discount = 0.9;
  out.mdp.reward = Table(2, 2, {1.0, 0.0, 0.0, 2.0});
  out.mdp.initial_dist = {0.5, 0.5};
  out.kernel = TransitionKernel(2, 2);
  out.kernel.probs = {0.8, 0.2, 0.1, 0.9,   // s0: a0, a1
                      0.7, 0.3, 0.4, 0.6};  // s1: a0, a1
  return out;
}

RobustInstance fixture_m2() {
  FiniteMdp mdp;
  mdp.n_states = 3;
  mdp.n_actions = 2;
  mdp.discount = 0.9;
  mdp.reward = Table(3, 2, {0.0, 0.3, 1.0, 0.0, 0.5, 0.9});
  mdp.initial_dist = {1.0, 0.0, 0.0};
  std::vector<std::vector<std::vector<double>>> members = {
      {{0.1, 0.8, 0.1}, {0.3, 0.4, 0.3}},  // (0, 0)
      {{0.6, 0.2, 0.2}, {0.8, 0.1, 0.1}},  // (0, 1)
      {{0.2, 0.5, 0.3}, {0.5, 0.2, 0.3}},  // (1, 0)
      {{0.1, 0.1, 0.8}, {0.2, 0.2, 0.6}},  // (1, 1)
      {{0.3, 0.3, 0.4}, {0.6, 0.2, 0.2}},  // (2, 0)
      {{0.0, 0.5, 0.5}, {0.4, 0.4, 0.2}},  // (2, 1)
  };
  return {std::move(mdp), UncertaintySet(3, 2, std::move(members))};
}

RobustInstance fixture_two_member_chain() {
  FiniteMdp mdp;
  mdp.n_states = 2;
  mdp.n_actions = 1;
  mdp.discount = 0.9;
  mdp.reward = Table(2, 1, {1.0, 0.0});
  mdp.initial_dist = {1.0, 0.0};
  std::vector<std::vector<std::vector<double>>> members = {
      {{0.9, 0.1}, {0.5, 0.5}},
      {{0.0, 1.0}},
  };
  return {std::move(mdp), UncertaintySet(2, 1, std::move(members))};
}

}  // namespace rrpi
