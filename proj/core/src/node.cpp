#include "dfrl/node.hpp"

#include <chrono>
#include <thread>

#include "dfrl/error.hpp"

namespace dfrl {

void NodeConfig::validate() const {
  params.validate();
  if (metrics_every == 0) throw Error(ErrorCode::kConfig, "metrics_every must be >= 1");
  // Throws kInfeasibleArena for impossible layouts.
  (void)GridArena::generate(arena, arena_seed());
}

Node::Node(NodeConfig cfg)
    : cfg_(std::move(cfg)),
      arena_(GridArena::generate(cfg_.arena, cfg_.arena_seed())),
      table_(kNumSensorStates, kNumMoves),
      pose_(arena_.spawn_pose()),
      rng_(cfg_.learner_seed()),
      exploration_(cfg_.params) {
  cfg_.params.validate();
  if (cfg_.metrics_every == 0) throw Error(ErrorCode::kConfig, "metrics_every must be >= 1");
}

void Node::sample_locked() {
  if (iteration_ == 0 || iteration_ % cfg_.metrics_every != 0 || last_sampled_ == iteration_) {
    return;
  }
  records_.push_back({cfg_.node_id, iteration_, rounds_applied_, sum_q(table_),
                      cumulative_reward_});
  last_sampled_ = iteration_;
}

void Node::step_locked() {
  sample_locked();
  const StateId s = sense(arena_, pose_).state_id;
  const double eps = exploration_.epsilon();

  ActionId a = 0;
  if (cfg_.algorithm == Algorithm::kSarsa && pending_action_) {
    a = *pending_action_;
  } else {
    a = select_action(table_, s, eps, rng_);
  }
  const StepResult r = step(arena_, pose_, static_cast<Move>(a));
  const StateId s_next = sense(arena_, r.pose).state_id;

  Transition t{s, a, r.reward, s_next, std::nullopt};
  if (cfg_.algorithm == Algorithm::kSarsa) {
    t.next_action = select_action(table_, s_next, eps, rng_);
    sarsa_update(table_, t, cfg_.params);
    pending_action_ = t.next_action;
  } else {
    q_update(table_, t, cfg_.params);
  }

  pose_ = r.pose;
  cumulative_reward_ += r.reward;
  ++iteration_;
  exploration_.step();
}

std::uint64_t Node::advance(std::uint64_t k) {
  std::uint64_t ran = 0;
  for (; ran < k; ++ran) {
    {
      std::lock_guard lock(mu_);
      if (iteration_ >= cfg_.iterations_total) break;
      step_locked();
    }
    if (cfg_.pace_ms != 0) std::this_thread::sleep_for(std::chrono::milliseconds(cfg_.pace_ms));
  }
  return ran;
}

bool Node::finished() const {
  std::lock_guard lock(mu_);
  return iteration_ >= cfg_.iterations_total;
}

MobileAgent Node::visit(const MobileAgent& agent) {
  std::lock_guard lock(mu_);
  VisitOutcome out = apply_visit(agent, cfg_.node_id, cfg_.algorithm, table_);
  if (out.table_replaced) ++rounds_applied_;
  return std::move(out.agent);
}

QTable Node::snapshot() const {
  std::lock_guard lock(mu_);
  return table_;
}

void Node::install(const QTable& table) {
  std::lock_guard lock(mu_);
  if (!table.same_shape(table_)) {
    throw Error(ErrorCode::kDimensionMismatch, "installed table has the wrong shape");
  }
  table_ = table;
}

NodeStatus Node::status() const {
  std::lock_guard lock(mu_);
  return {cfg_.node_id,       cfg_.algorithm,  iteration_, sum_q(table_),
          cumulative_reward_, rounds_applied_, iteration_ >= cfg_.iterations_total};
}

void Node::flush_sample() {
  std::lock_guard lock(mu_);
  sample_locked();
}

std::vector<MetricsRecord> Node::drain_records() {
  std::lock_guard lock(mu_);
  return std::exchange(records_, {});
}

}  // namespace dfrl
