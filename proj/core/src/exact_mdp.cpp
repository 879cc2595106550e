#include "dfrl/exact_mdp.hpp"

#include <algorithm>
#include <cmath>

#include "dfrl/error.hpp"
#include "dfrl/learning.hpp"

namespace dfrl {

ExactMdp::ExactMdp(std::size_t num_states, std::size_t num_actions, std::vector<StateId> next,
                   std::vector<double> reward)
    : num_states_(num_states),
      num_actions_(num_actions),
      next_(std::move(next)),
      reward_(std::move(reward)) {
  if (num_states == 0 || num_actions == 0) {
    throw Error(ErrorCode::kInvalidArgument, "mdp dimensions must be positive");
  }
  const std::size_t n = num_states * num_actions;
  if (next_.size() != n || reward_.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "mdp transition/reward tables have wrong size");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (next_[i] >= num_states) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "successor state " + std::to_string(next_[i]) + " out of range");
    }
    if (!std::isfinite(reward_[i])) {
      throw Error(ErrorCode::kNonFiniteValue, "mdp reward must be finite");
    }
  }
}

ExactMdp ExactMdp::from_arena(const GridArena& arena) {
  const int w = arena.width();
  const int h = arena.height();
  std::vector<RobotPose> poses;
  std::vector<std::int64_t> pose_index(static_cast<std::size_t>(w) * h * 4, -1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (arena.is_obstacle({x, y})) continue;
      for (int hd = 0; hd < 4; ++hd) {
        pose_index[(static_cast<std::size_t>(y) * w + x) * 4 + hd] =
            static_cast<std::int64_t>(poses.size());
        poses.push_back({{x, y}, static_cast<Heading>(hd)});
      }
    }
  }

  const auto lookup = [&](const RobotPose& p) {
    return static_cast<StateId>(
        pose_index[(static_cast<std::size_t>(p.cell.y) * w + p.cell.x) * 4 +
                   static_cast<int>(p.heading)]);
  };

  std::vector<StateId> next;
  std::vector<double> reward;
  next.reserve(poses.size() * kNumMoves);
  reward.reserve(poses.size() * kNumMoves);
  for (const RobotPose& p : poses) {
    for (ActionId a = 0; a < kNumMoves; ++a) {
      const StepResult r = step(arena, p, static_cast<Move>(a));
      next.push_back(lookup(r.pose));
      reward.push_back(r.reward);
    }
  }

  ExactMdp mdp(poses.size(), kNumMoves, std::move(next), std::move(reward));
  mdp.poses_ = std::move(poses);
  mdp.pose_index_ = std::move(pose_index);
  mdp.width_ = w;
  return mdp;
}

std::optional<StateId> ExactMdp::state_of(const RobotPose& pose) const {
  if (poses_.empty() || pose.cell.x < 0 || pose.cell.y < 0 || pose.cell.x >= width_) {
    return std::nullopt;
  }
  const std::size_t i =
      (static_cast<std::size_t>(pose.cell.y) * width_ + pose.cell.x) * 4 +
      static_cast<int>(pose.heading);
  if (i >= pose_index_.size() || pose_index_[i] < 0) return std::nullopt;
  return static_cast<StateId>(pose_index_[i]);
}

std::vector<StateId> ExactMdp::reachable_from(StateId start) const {
  if (start >= num_states_) {
    throw Error(ErrorCode::kIndexOutOfRange, "start state out of range");
  }
  std::vector<std::uint8_t> seen(num_states_, 0);
  std::vector<StateId> stack{start};
  seen[start] = 1;
  while (!stack.empty()) {
    const StateId s = stack.back();
    stack.pop_back();
    for (ActionId a = 0; a < num_actions_; ++a) {
      const StateId n = next(s, a);
      if (!seen[n]) {
        seen[n] = 1;
        stack.push_back(n);
      }
    }
  }
  std::vector<StateId> out;
  for (StateId s = 0; s < num_states_; ++s) {
    if (seen[s]) out.push_back(s);
  }
  return out;
}

QTable value_iteration(const ExactMdp& mdp, double gamma, double tol, std::size_t max_sweeps) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "gamma must be in [0, 1)");
  }
  if (!(tol > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tol must be positive");
  }
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();
  std::vector<double> q(S * A, 0.0);
  std::vector<double> v(S, 0.0);

  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    for (std::size_t s = 0; s < S; ++s) {
      v[s] = *std::max_element(q.begin() + s * A, q.begin() + (s + 1) * A);
    }
    double change = 0.0;
    for (StateId s = 0; s < S; ++s) {
      for (ActionId a = 0; a < A; ++a) {
        const double updated = mdp.reward(s, a) + gamma * v[mdp.next(s, a)];
        double& cur = q[static_cast<std::size_t>(s) * A + a];
        change = std::max(change, std::abs(updated - cur));
        cur = updated;
      }
    }
    if (change < tol) return QTable::from_values(S, A, std::move(q));
  }
  throw Error(ErrorCode::kNotConverged,
              "value iteration did not converge within " + std::to_string(max_sweeps) +
                  " sweeps");
}

double bellman_residual(const ExactMdp& mdp, const QTable& q, double gamma) {
  if (q.num_states() != mdp.num_states() || q.num_actions() != mdp.num_actions()) {
    throw Error(ErrorCode::kDimensionMismatch, "q-table does not match mdp");
  }
  double worst = 0.0;
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    for (ActionId a = 0; a < mdp.num_actions(); ++a) {
      const double target = mdp.reward(s, a) + gamma * max_value(q, mdp.next(s, a));
      worst = std::max(worst, std::abs(q.at(s, a) - target));
    }
  }
  return worst;
}

}  // namespace dfrl
