#pragma once

// Instance generators and the small named fixtures used by tests and `check`.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rrpi/core.hpp"

namespace rrpi {

struct RandomMdpSpec {
  std::size_t n_states = 5;
  std::size_t n_actions = 2;
  /// Number of reachable next states per (s, a).
  std::size_t branching = 2;
  double reward_min = 0.0;
  double reward_max = 1.0;
  double discount = 0.9;
  std::uint64_t seed = 0;

  void validate() const;
};

struct MdpInstance {
  FiniteMdp mdp;
  TransitionKernel kernel;
};

struct RobustInstance {
  FiniteMdp mdp;
  UncertaintySet set;
};

/// Rewards uniform in [reward_min, reward_max]; each row is Dirichlet(1) over
/// `branching` distinct random next states; uniform initial distribution.
MdpInstance gen_random_mdp(const RandomMdpSpec& spec);

/// gen_random_mdp plus n_members - 1 further members per (s, a), each an
/// independent Dirichlet(1) draw on the nominal row's support. Member 0 is the
/// nominal row.
RobustInstance gen_random_robust(const RandomMdpSpec& spec, std::size_t n_members);

struct GridCell {
  std::size_t x = 0;
  std::size_t y = 0;
  bool operator==(const GridCell&) const = default;
};

/// Inclusive rectangle whose cells use their own slip perturbation.
struct GridRegion {
  GridCell lo;
  GridCell hi;
  double perturbation = 0.0;
};

struct GridworldSpec {
  std::size_t width = 4;
  std::size_t height = 4;
  double slip_prob = 0.1;
  /// Member k uses slip_prob + delta_k, delta_k evenly spaced in [-perturbation, +perturbation].
  double perturbation = 0.0;
  std::size_t n_members = 3;
  double discount = 0.95;
  GridCell start{0, 0};
  std::vector<GridCell> goals;
  double goal_reward = 1.0;
  std::vector<GridCell> hazards;
  double hazard_reward = -1.0;
  std::vector<GridCell> walls;
  std::vector<GridRegion> regions;

  void validate() const;
  double perturbation_at(GridCell c) const;
};

/// Actions: 0 up (y-1), 1 right (x+1), 2 down (y+1), 3 left (x-1).
inline constexpr std::size_t kGridActions = 4;

/// Cell (x, y) is state y * width + x; state width * height is an absorbing
/// zero-reward sink. Goal and hazard cells pay their reward on any action and
/// move to the sink. The intended move happens with probability 1 - slip, each
/// perpendicular move with slip / 2; moves into walls or off the grid stay put.
/// Wall cells are self-loops with zero reward.
RobustInstance gen_gridworld(const GridworldSpec& spec);

std::size_t grid_state(const GridworldSpec& spec, GridCell c);

// Named fixtures.

/// M1: 2 states, 2 actions, nominal kernel.
MdpInstance fixture_m1();
/// M2: 3 states, 2 actions, two members per pair.
RobustInstance fixture_m2();
/// Two states, one action; s1 absorbing with zero reward, s0 pays 1 and moves
/// with members (0.9, 0.1) or (0.5, 0.5). Robust value of s0 is 1 / 0.55.
RobustInstance fixture_two_member_chain();

}  // namespace rrpi
