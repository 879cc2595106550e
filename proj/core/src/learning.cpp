#include "dfrl/learning.hpp"

#include <cmath>
#include <string>

#include "dfrl/error.hpp"

namespace dfrl {

namespace {

void check_range(double v, double lo, double hi, bool hi_open, const char* name) {
  const bool ok = v >= lo && (hi_open ? v < hi : v <= hi);
  if (!ok || !std::isfinite(v)) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(name) + " out of range: " + std::to_string(v));
  }
}

void check_transition(const QTable& table, const Transition& t) {
  table.check_state(t.state, "state");
  table.check_action(t.action, "action");
  table.check_state(t.next_state, "next_state");
  if (!std::isfinite(t.reward)) {
    throw Error(ErrorCode::kNonFiniteValue, "reward must be finite");
  }
}

void apply_td(QTable& table, const Transition& t, double alpha, double gamma,
              double bootstrap) {
  const double old = table.at(t.state, t.action);
  table.set(t.state, t.action, old + alpha * (t.reward + gamma * bootstrap - old));
}

}  // namespace

void LearningParams::validate() const {
  check_range(alpha, 0.0, 1.0, false, "alpha");
  check_range(gamma, 0.0, 1.0, true, "gamma");
  check_range(epsilon, 0.0, 1.0, false, "epsilon");
  if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "epsilon_decay out of range: " + std::to_string(epsilon_decay));
  }
  check_range(epsilon_min, 0.0, 1.0, false, "epsilon_min");
  if (epsilon_min > epsilon) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon_min exceeds epsilon");
  }
}

void q_update(QTable& table, const Transition& t, const LearningParams& p) {
  check_transition(table, t);
  apply_td(table, t, p.alpha, p.gamma, max_value(table, t.next_state));
}

void sarsa_update(QTable& table, const Transition& t, const LearningParams& p) {
  check_transition(table, t);
  if (!t.next_action) {
    throw Error(ErrorCode::kMissingNextAction, "sarsa update requires next_action");
  }
  table.check_action(*t.next_action, "next_action");
  apply_td(table, t, p.alpha, p.gamma, table.at(t.next_state, *t.next_action));
}

ActionId argmax_action(const QTable& table, StateId state) {
  const auto r = table.row(state);
  ActionId best = 0;
  for (ActionId a = 1; a < r.size(); ++a) {
    if (r[a] > r[best]) best = a;
  }
  return best;
}

double max_value(const QTable& table, StateId state) {
  return table.row(state)[argmax_action(table, state)];
}

ActionId select_action(const QTable& table, StateId state, double epsilon, Rng& rng) {
  table.check_state(state);
  if (rng.uniform01() < epsilon) {
    return static_cast<ActionId>(rng.uniform_index(table.num_actions()));
  }
  return argmax_action(table, state);
}

PolicySnapshot greedy_policy(const QTable& table) {
  PolicySnapshot policy;
  policy.greedy_action.reserve(table.num_states());
  for (StateId s = 0; s < table.num_states(); ++s) {
    policy.greedy_action.push_back(argmax_action(table, s));
  }
  return policy;
}

double sum_q(const QTable& table) {
  double total = 0.0;
  for (double v : table.values()) total += v;
  return total;
}

}  // namespace dfrl
