#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dfrl/federation.hpp"
#include "dfrl/node.hpp"
#include "dfrl/node_types.hpp"

namespace dfrl {

enum class Transport : std::uint8_t { kInProcess, kTcp };
enum class Schedule : std::uint8_t {
  kLockstep,     // every node runs exactly m iterations between rounds
  kFreeRunning,  // nodes learn continuously; rounds keyed to the initiator
};

struct AgentSpec {
  std::optional<Algorithm> tag;
};

struct FederationSettings {
  std::uint64_t respite_m = 500;
  std::optional<std::uint64_t> rounds_max;
  std::optional<double> saturation_tolerance;
  AggregationMethod method = AggregationMethod::kPairwiseAverage;
  /// One untagged agent unless configured otherwise.
  std::vector<AgentSpec> agents{AgentSpec{}};
};

struct ExperimentSpec {
  std::vector<NodeConfig> nodes;
  /// nullopt means standalone: no agent is launched.
  std::optional<FederationSettings> federation;
  std::uint64_t iterations_total = 25'000;
  std::uint64_t metrics_every = 100;
  std::filesystem::path output_dir = "dfrl-out";
  std::uint64_t master_seed = 1;
  Transport transport = Transport::kInProcess;
  Schedule schedule = Schedule::kLockstep;
  /// Binary that provides the `node` subcommand (TCP transport only).
  std::filesystem::path node_executable;

  void validate() const;
};

/// Per-node seed: adding nodes never perturbs an existing node's streams.
std::uint64_t node_seed(std::uint64_t master_seed, NodeId node_id);

/// The five-robot layout: arenas with 1, 2, 2, 4 and 0 blocks, respite 500,
/// default learning parameters.
ExperimentSpec reference_shape_spec(Algorithm algorithm, AggregationMethod method,
                                std::uint64_t master_seed);

/// One node with node 1's seed and arena, no federation.
ExperimentSpec standalone_spec(const ArenaShape& arena, Algorithm algorithm,
                               std::uint64_t master_seed);

struct ExperimentResult {
  /// Records per node, in spec.nodes order.
  std::vector<std::vector<MetricsRecord>> records;
  std::vector<RoundReport> rounds;
  std::vector<std::filesystem::path> csv_files;
  std::filesystem::path manifest;
  std::vector<std::string> failures;

  bool ok() const noexcept { return failures.empty(); }
};

struct RunHooks {
  /// Receives one structured line per federation round.
  std::function<void(const std::string&)> log;
  /// Called after every completed round with the peers in node order.
  std::function<void(const RoundReport&, std::span<ControlledNode* const>)> after_round;
  /// Skip writing CSVs and the manifest.
  bool write_files = true;
};

/// Runs every node for iterations_total iterations with federation rounds
/// every respite_m iterations. Deterministic for a given master_seed in
/// lockstep mode, for either transport.
ExperimentResult run_experiment(const ExperimentSpec& spec, const RunHooks& hooks = {});

/// Drives an experiment over already-running nodes (the `agent` subcommand
/// and the TCP launcher share this). Nodes must be in spec order.
ExperimentResult drive_experiment(const ExperimentSpec& spec,
                                  std::span<ControlledNode* const> nodes,
                                  const RunHooks& hooks = {});

inline constexpr std::string_view kCsvHeader = "node_id,iteration,round,sum_q,cumulative_reward";

/// Header plus rows ordered by (node_id, iteration); floats in shortest
/// round-trip form. Throws kIo.
void emit_csv(std::span<const MetricsRecord> records, const std::filesystem::path& path);
std::string csv_text(std::span<const MetricsRecord> records);

/// Throws kConfig naming the line of a malformed row.
std::vector<MetricsRecord> read_csv(const std::filesystem::path& path);
std::vector<MetricsRecord> parse_csv(std::string_view text);

struct NodeSummary {
  NodeId node_id = 0;
  std::uint64_t final_iteration = 0;
  double final_sum_q = 0.0;
  /// First iteration from which sum_q stays within 1% of its final value.
  std::uint64_t saturation_iteration = 0;
  std::optional<double> min_after_first_round;
  /// sum_q fell across at least one round boundary.
  bool dip = false;
  double total_reward = 0.0;
};

/// Records must belong to a single node, ordered by iteration.
NodeSummary summarize_node(std::span<const MetricsRecord> records,
                           double saturation_band = 0.01);
std::vector<NodeSummary> summarize(std::span<const std::filesystem::path> csv_files);
std::string format_summary(std::span<const NodeSummary> summaries);

/// gnuplot script plotting one column of each CSV against iteration.
std::string plot_script(std::span<const std::filesystem::path> csv_files,
                        std::string_view column = "sum_q");

/// Parses a JSON experiment config. Throws kConfig.
ExperimentSpec parse_experiment_config(std::string_view json_text);
ExperimentSpec load_experiment_config(const std::filesystem::path& path);

}  // namespace dfrl
