#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "dfrl/arena.hpp"
#include "dfrl/q_table.hpp"

namespace dfrl {

/// Deterministic finite MDP: each (state, action) has exactly one successor
/// and one reward.
class ExactMdp {
 public:
  ExactMdp(std::size_t num_states, std::size_t num_actions, std::vector<StateId> next,
           std::vector<double> reward);

  /// Pose-level MDP of an arena: one state per (free cell, heading) in
  /// row-major cell order, headings N, E, S, W. Dynamics follow step().
  static ExactMdp from_arena(const GridArena& arena);

  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_actions() const noexcept { return num_actions_; }

  StateId next(StateId s, ActionId a) const { return next_[index(s, a)]; }
  double reward(StateId s, ActionId a) const { return reward_[index(s, a)]; }

  /// Only populated for MDPs built from an arena.
  std::optional<StateId> state_of(const RobotPose& pose) const;
  const RobotPose& pose_of(StateId s) const { return poses_.at(s); }
  bool has_poses() const noexcept { return !poses_.empty(); }

  /// States reachable from `start` under some action sequence, ascending.
  std::vector<StateId> reachable_from(StateId start) const;

 private:
  std::size_t index(StateId s, ActionId a) const {
    return static_cast<std::size_t>(s) * num_actions_ + a;
  }

  std::size_t num_states_;
  std::size_t num_actions_;
  std::vector<StateId> next_;
  std::vector<double> reward_;
  std::vector<RobotPose> poses_;
  std::vector<std::int64_t> pose_index_;  // (y*width + x)*4 + heading -> state, or -1
  int width_ = 0;
};

/// Synchronous (Jacobi) value iteration on Q. Stops once a sweep changes no
/// entry by tol or more, so the returned table has Bellman residual < tol.
/// Throws kNotConverged after max_sweeps.
QTable value_iteration(const ExactMdp& mdp, double gamma, double tol,
                       std::size_t max_sweeps = 1'000'000);

/// Largest |Q(s,a) - (r(s,a) + gamma * max_a' Q(s',a'))| over all pairs.
double bellman_residual(const ExactMdp& mdp, const QTable& q, double gamma);

}  // namespace dfrl
