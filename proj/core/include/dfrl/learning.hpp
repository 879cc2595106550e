#pragma once

#include <optional>
#include <vector>

#include "dfrl/q_table.hpp"
#include "dfrl/rng.hpp"

namespace dfrl {

struct LearningParams {
  double alpha = 0.1;
  double gamma = 0.9;
  double epsilon = 0.3;
  double epsilon_decay = 0.9995;
  double epsilon_min = 0.05;

  /// Throws kInvalidArgument when a field is outside its range.
  void validate() const;

  bool operator==(const LearningParams&) const = default;
};

struct Transition {
  StateId state = 0;
  ActionId action = 0;
  double reward = 0.0;
  StateId next_state = 0;
  std::optional<ActionId> next_action;
};

struct PolicySnapshot {
  std::vector<ActionId> greedy_action;

  bool operator==(const PolicySnapshot&) const = default;
};

/// Off-policy TD update: Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a)).
/// Touches only entry (s,a). next_action is ignored.
void q_update(QTable& table, const Transition& t, const LearningParams& p);

/// On-policy TD update bootstrapping on the supplied next action.
void sarsa_update(QTable& table, const Transition& t, const LearningParams& p);

/// Lowest-index argmax of a row.
ActionId argmax_action(const QTable& table, StateId state);

double max_value(const QTable& table, StateId state);

/// Epsilon-greedy: one uniform draw decides explore vs exploit; exploring
/// draws a second uniform index from the same stream.
ActionId select_action(const QTable& table, StateId state, double epsilon, Rng& rng);

PolicySnapshot greedy_policy(const QTable& table);

/// Row-major sequential sum.
double sum_q(const QTable& table);

/// Multiplicative per-iteration epsilon decay clamped at epsilon_min.
class ExplorationSchedule {
 public:
  explicit ExplorationSchedule(const LearningParams& p)
      : epsilon_(p.epsilon), decay_(p.epsilon_decay), floor_(p.epsilon_min) {}

  double epsilon() const noexcept { return epsilon_; }

  void step() noexcept {
    epsilon_ *= decay_;
    if (epsilon_ < floor_) epsilon_ = floor_;
  }

 private:
  double epsilon_;
  double decay_;
  double floor_;
};

}  // namespace dfrl
