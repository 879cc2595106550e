#include "dfrl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include "dfrl/error.hpp"
#include "dfrl/float_format.hpp"
#include "dfrl/tcp.hpp"
#include "process.hpp"

#ifndef DFRL_VERSION
#define DFRL_VERSION "unknown"
#endif

namespace dfrl {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Spec helpers

void ExperimentSpec::validate() const {
  if (nodes.empty()) throw Error(ErrorCode::kConfig, "experiment needs at least one node");
  if (metrics_every == 0) throw Error(ErrorCode::kConfig, "metrics_every must be >= 1");
  std::set<NodeId> ids;
  for (const auto& n : nodes) {
    if (!ids.insert(n.node_id).second) {
      throw Error(ErrorCode::kConfig, "duplicate node id " + std::to_string(n.node_id));
    }
    try {
      n.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfig, "node " + std::to_string(n.node_id) + ": " + e.what());
    }
  }
  if (federation) {
    if (federation->respite_m == 0) throw Error(ErrorCode::kConfig, "respite must be >= 1");
    if (federation->agents.empty()) throw Error(ErrorCode::kConfig, "federation needs an agent");
  }
}

std::uint64_t node_seed(std::uint64_t master_seed, NodeId node_id) {
  return derive_seed(master_seed, node_id);
}

ExperimentSpec reference_shape_spec(Algorithm algorithm, AggregationMethod method,
                                std::uint64_t master_seed) {
  constexpr int kBlocks[] = {1, 2, 2, 4, 0};
  ExperimentSpec spec;
  spec.master_seed = master_seed;
  for (NodeId id = 1; id <= 5; ++id) {
    NodeConfig n;
    n.node_id = id;
    n.algorithm = algorithm;
    n.arena = ArenaShape{12, 12, kBlocks[id - 1]};
    n.seed = node_seed(master_seed, id);
    n.iterations_total = spec.iterations_total;
    n.metrics_every = spec.metrics_every;
    spec.nodes.push_back(n);
  }
  FederationSettings fed;
  fed.respite_m = 500;
  fed.method = method;
  spec.federation = fed;
  return spec;
}

ExperimentSpec standalone_spec(const ArenaShape& arena, Algorithm algorithm,
                               std::uint64_t master_seed) {
  ExperimentSpec spec;
  spec.master_seed = master_seed;
  NodeConfig n;
  n.node_id = 1;
  n.algorithm = algorithm;
  n.arena = arena;
  n.seed = node_seed(master_seed, 1);
  n.iterations_total = spec.iterations_total;
  n.metrics_every = spec.metrics_every;
  spec.nodes.push_back(n);
  return spec;
}

// ---------------------------------------------------------------------------
// Driving

namespace {

struct AgentRun {
  MobileAgent agent;
  std::vector<ControlledNode*> peers;
  std::uint64_t completed = 0;
  std::optional<double> last_post_sum_q;
  bool stopped = false;
};

std::vector<AgentRun> make_agents(const ExperimentSpec& spec,
                                  std::span<ControlledNode* const> nodes) {
  std::vector<AgentRun> runs;
  if (!spec.federation) return runs;
  std::vector<NodeDescriptor> descriptors;
  for (ControlledNode* n : nodes) descriptors.push_back({n->id(), n->algorithm()});
  std::uint64_t agent_id = 1;
  for (const AgentSpec& a : spec.federation->agents) {
    AgentRun run;
    auto itinerary = filter_itinerary(descriptors, a.tag);
    for (NodeId id : itinerary) {
      for (ControlledNode* n : nodes) {
        if (n->id() == id) run.peers.push_back(n);
      }
    }
    run.agent = make_agent(agent_id++, std::move(itinerary), spec.federation->method, a.tag);
    runs.push_back(std::move(run));
  }
  return runs;
}

void federate(const ExperimentSpec& spec, std::vector<AgentRun>& agents,
              std::span<ControlledNode* const> nodes, const RunHooks& hooks,
              ExperimentResult& result) {
  const FederationSettings& fed = *spec.federation;
  for (AgentRun& run : agents) {
    if (run.stopped) continue;
    if (fed.rounds_max && run.completed >= *fed.rounds_max) {
      run.stopped = true;
      continue;
    }
    std::vector<FederationPeer*> peers(run.peers.begin(), run.peers.end());
    RoundReport report = run_round(peers, run.agent);
    if (hooks.log) hooks.log(format_round_report(report));
    if (!report.aborted) {
      ++run.completed;
      const double post = report.nodes.front().post_sum_q;
      if (fed.saturation_tolerance && run.last_post_sum_q &&
          std::abs(post - *run.last_post_sum_q) <= *fed.saturation_tolerance * std::abs(post)) {
        run.stopped = true;
      }
      run.last_post_sum_q = post;
    }
    if (hooks.after_round) hooks.after_round(report, nodes);
    result.rounds.push_back(std::move(report));
  }
}

void drive_lockstep(const ExperimentSpec& spec, std::span<ControlledNode* const> nodes,
                    std::vector<AgentRun>& agents, const RunHooks& hooks,
                    ExperimentResult& result) {
  const std::uint64_t total = spec.iterations_total;
  const std::uint64_t m = spec.federation ? spec.federation->respite_m : total;
  std::uint64_t done = 0;
  while (done < total) {
    const std::uint64_t chunk = std::min(m, total - done);
    for (ControlledNode* n : nodes) n->advance(chunk);
    done += chunk;
    if (spec.federation && done % m == 0) federate(spec, agents, nodes, hooks, result);
  }
}

void drive_free(const ExperimentSpec& spec, std::span<ControlledNode* const> nodes,
                std::vector<AgentRun>& agents, const RunHooks& hooks, ExperimentResult& result) {
  std::vector<std::thread> learners;
  std::atomic<std::size_t> running{nodes.size()};
  std::mutex failures_mu;
  for (ControlledNode* n : nodes) {
    learners.emplace_back([&, n] {
      try {
        n->advance(spec.iterations_total);
      } catch (const std::exception& e) {
        std::lock_guard lock(failures_mu);
        result.failures.push_back("node " + std::to_string(n->id()) + ": " + e.what());
      }
      --running;
    });
  }
  if (spec.federation && !agents.empty()) {
    // The respite is measured on the first agent's initiator.
    ControlledNode* initiator = agents.front().peers.front();
    const std::uint64_t m = spec.federation->respite_m;
    std::uint64_t next_boundary = m;
    while (running.load() > 0 && next_boundary <= spec.iterations_total) {
      std::uint64_t it = 0;
      try {
        it = initiator->status().iteration;
      } catch (const std::exception&) {
      }
      if (it >= next_boundary) {
        federate(spec, agents, nodes, hooks, result);
        next_boundary += m;
      } else {
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
      }
    }
  }
  for (auto& t : learners) t.join();
}

std::string params_arg(const LearningParams& p) {
  return format_double(p.alpha) + "," + format_double(p.gamma) + "," + format_double(p.epsilon) +
         "," + format_double(p.epsilon_decay) + "," + format_double(p.epsilon_min);
}

json manifest_json(const ExperimentSpec& spec, const ExperimentResult& result) {
  json nodes = json::array();
  for (const auto& n : spec.nodes) {
    nodes.push_back({{"id", n.node_id},
                     {"algorithm", std::string(to_string(n.algorithm))},
                     {"arena", {{"width", n.arena.width},
                                {"height", n.arena.height},
                                {"blocks", n.arena.num_blocks}}},
                     {"seed", n.seed},
                     {"arena_seed", n.arena_seed()},
                     {"learner_seed", n.learner_seed()},
                     {"params", params_arg(n.params)}});
  }
  json fed = "standalone";
  if (spec.federation) {
    json agents = json::array();
    for (const auto& a : spec.federation->agents) {
      agents.push_back({{"tag", a.tag ? json(std::string(to_string(*a.tag))) : json(nullptr)}});
    }
    fed = {{"respite", spec.federation->respite_m},
           {"method", std::string(to_string(spec.federation->method))},
           {"rounds_max",
            spec.federation->rounds_max ? json(*spec.federation->rounds_max) : json(nullptr)},
           {"agents", agents}};
  }
  std::size_t aborted = 0;
  for (const auto& r : result.rounds) aborted += r.aborted ? 1 : 0;
  json csv = json::array();
  for (const auto& p : result.csv_files) csv.push_back(p.filename().string());
  return {{"version", DFRL_VERSION},
          {"master_seed", spec.master_seed},
          {"iterations_total", spec.iterations_total},
          {"metrics_every", spec.metrics_every},
          {"transport", spec.transport == Transport::kTcp ? "tcp" : "inproc"},
          {"schedule", spec.schedule == Schedule::kLockstep ? "lockstep" : "free"},
          {"federation", fed},
          {"nodes", nodes},
          {"rounds_completed", result.rounds.size() - aborted},
          {"rounds_aborted", aborted},
          {"failures", result.failures},
          {"csv", csv}};
}

void write_outputs(const ExperimentSpec& spec, ExperimentResult& result) {
  std::error_code ec;
  fs::create_directories(spec.output_dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIo, "cannot create " + spec.output_dir.string() + ": " + ec.message());
  }
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    const fs::path path =
        spec.output_dir / ("node_" + std::to_string(spec.nodes[i].node_id) + ".csv");
    emit_csv(result.records[i], path);
    result.csv_files.push_back(path);
  }
  result.manifest = spec.output_dir / "manifest.json";
  std::ofstream out(result.manifest);
  out << manifest_json(spec, result).dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + result.manifest.string());
}

}  // namespace

ExperimentResult drive_experiment(const ExperimentSpec& spec,
                                  std::span<ControlledNode* const> nodes,
                                  const RunHooks& hooks) {
  ExperimentResult result;
  result.records.resize(nodes.size());
  try {
    auto agents = make_agents(spec, nodes);
    if (spec.schedule == Schedule::kLockstep) {
      drive_lockstep(spec, nodes, agents, hooks, result);
    } else {
      drive_free(spec, nodes, agents, hooks, result);
    }
  } catch (const std::exception& e) {
    result.failures.push_back(e.what());
  }
  // Flush what exists even after a failure so partial CSVs survive.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    try {
      nodes[i]->flush();
      result.records[i] = nodes[i]->drain();
    } catch (const std::exception& e) {
      result.failures.push_back("node " + std::to_string(nodes[i]->id()) + ": " + e.what());
    }
  }
  return result;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const RunHooks& hooks) {
  spec.validate();
  ExperimentSpec effective = spec;
  for (auto& n : effective.nodes) {
    n.iterations_total = spec.iterations_total;
    n.metrics_every = spec.metrics_every;
  }

  if (spec.transport == Transport::kTcp && spec.node_executable.empty()) {
    throw Error(ErrorCode::kConfig, "tcp transport needs the node executable path");
  }

  ExperimentResult result;
  if (effective.transport == Transport::kInProcess) {
    std::vector<std::unique_ptr<Node>> nodes;
    std::vector<std::unique_ptr<InProcessPeer>> peers;
    std::vector<ControlledNode*> handles;
    for (const auto& cfg : effective.nodes) {
      nodes.push_back(std::make_unique<Node>(cfg));
      peers.push_back(std::make_unique<InProcessPeer>(*nodes.back()));
      handles.push_back(peers.back().get());
    }
    result = drive_experiment(effective, handles, hooks);
  } else {
    std::vector<std::unique_ptr<detail::ChildProcess>> children;
    std::vector<std::unique_ptr<TcpPeer>> peers;
    std::vector<ControlledNode*> handles;
    try {
      for (const auto& cfg : effective.nodes) {
        const std::string arena = std::to_string(cfg.arena.width) + "x" +
                                  std::to_string(cfg.arena.height) + "x" +
                                  std::to_string(cfg.arena.num_blocks);
        children.push_back(std::make_unique<detail::ChildProcess>(
            effective.node_executable,
            std::vector<std::string>{"node", "--node-id", std::to_string(cfg.node_id),
                                     "--listen", "127.0.0.1:0", "--algo",
                                     std::string(to_string(cfg.algorithm)), "--arena", arena,
                                     "--seed", std::to_string(cfg.seed), "--params",
                                     params_arg(cfg.params), "--iterations",
                                     std::to_string(cfg.iterations_total), "--metrics-every",
                                     std::to_string(cfg.metrics_every), "--pace-ms",
                                     std::to_string(cfg.pace_ms)}));
        const std::string line = children.back()->read_line(std::chrono::seconds(10));
        constexpr std::string_view kPrefix = "listening ";
        if (line.rfind(kPrefix, 0) != 0) {
          throw Error(ErrorCode::kIo, "unexpected node output: " + line);
        }
        peers.push_back(std::make_unique<TcpPeer>(cfg.node_id, cfg.algorithm,
                                                  parse_endpoint(line.substr(kPrefix.size()))));
        handles.push_back(peers.back().get());
      }
      result = drive_experiment(effective, handles, hooks);
    } catch (const std::exception& e) {
      result.records.resize(effective.nodes.size());
      result.failures.push_back(e.what());
    }
    for (auto& p : peers) {
      try {
        p->shutdown();
      } catch (const std::exception&) {
      }
    }
    for (auto& c : children) c->wait(std::chrono::seconds(5));
  }

  if (hooks.write_files) write_outputs(effective, result);
  return result;
}

// ---------------------------------------------------------------------------
// CSV

std::string csv_text(std::span<const MetricsRecord> records) {
  std::vector<MetricsRecord> sorted(records.begin(), records.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return std::tie(a.node_id, a.iteration) < std::tie(b.node_id, b.iteration);
  });
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : sorted) {
    out += std::to_string(r.node_id);
    out += ',';
    out += std::to_string(r.iteration);
    out += ',';
    out += std::to_string(r.round);
    out += ',';
    out += format_double(r.sum_q);
    out += ',';
    out += format_double(r.cumulative_reward);
    out += '\n';
  }
  return out;
}

void emit_csv(std::span<const MetricsRecord> records, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << csv_text(records);
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write to " + path.string() + " failed");
}

std::vector<MetricsRecord> parse_csv(std::string_view text) {
  std::vector<MetricsRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1) {
      if (line != kCsvHeader) {
        throw Error(ErrorCode::kConfig, "csv header mismatch: '" + std::string(line) + "'");
      }
      continue;
    }
    if (line.empty()) continue;

    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    const auto bad = [&] {
      return Error(ErrorCode::kConfig, "malformed csv row at line " + std::to_string(line_no));
    };
    if (fields.size() != 5) throw bad();
    const auto as_uint = [&](std::string_view f) -> std::uint64_t {
      const auto v = parse_double(f);
      if (!v || *v < 0 || std::floor(*v) != *v) throw bad();
      return static_cast<std::uint64_t>(*v);
    };
    const auto sum = parse_double(fields[3]);
    const auto reward = parse_double(fields[4]);
    if (!sum || !reward) throw bad();
    out.push_back({static_cast<NodeId>(as_uint(fields[0])), as_uint(fields[1]),
                   as_uint(fields[2]), *sum, *reward});
  }
  if (line_no == 0) throw Error(ErrorCode::kConfig, "empty csv");
  return out;
}

std::vector<MetricsRecord> read_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_csv(buf.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Summaries

NodeSummary summarize_node(std::span<const MetricsRecord> records, double saturation_band) {
  NodeSummary s;
  if (records.empty()) return s;
  const MetricsRecord& last = records.back();
  s.node_id = last.node_id;
  s.final_iteration = last.iteration;
  s.final_sum_q = last.sum_q;
  s.total_reward = last.cumulative_reward;

  const double band = saturation_band * std::abs(s.final_sum_q);
  std::size_t first_inside = records.size() - 1;
  while (first_inside > 0 &&
         std::abs(records[first_inside - 1].sum_q - s.final_sum_q) <= band) {
    --first_inside;
  }
  s.saturation_iteration = records[first_inside].iteration;

  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].round >= 1) {
      s.min_after_first_round = s.min_after_first_round
                                    ? std::min(*s.min_after_first_round, records[i].sum_q)
                                    : records[i].sum_q;
    }
    if (i > 0 && records[i].round > records[i - 1].round &&
        records[i].sum_q < records[i - 1].sum_q) {
      s.dip = true;
    }
  }
  return s;
}

std::vector<NodeSummary> summarize(std::span<const fs::path> csv_files) {
  std::vector<NodeSummary> out;
  for (const auto& path : csv_files) {
    auto records = read_csv(path);
    std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
      return std::tie(a.node_id, a.iteration) < std::tie(b.node_id, b.iteration);
    });
    std::size_t begin = 0;
    for (std::size_t i = 1; i <= records.size(); ++i) {
      if (i == records.size() || records[i].node_id != records[begin].node_id) {
        out.push_back(summarize_node(std::span(records).subspan(begin, i - begin)));
        begin = i;
      }
    }
  }
  return out;
}

std::string format_summary(std::span<const NodeSummary> summaries) {
  std::ostringstream out;
  out << "node_id,final_iteration,final_sum_q,saturation_iteration,min_after_first_round,dip,"
         "total_reward\n";
  for (const auto& s : summaries) {
    out << s.node_id << ',' << s.final_iteration << ',' << format_double(s.final_sum_q) << ','
        << s.saturation_iteration << ','
        << (s.min_after_first_round ? format_double(*s.min_after_first_round) : "") << ','
        << (s.dip ? "true" : "false") << ',' << format_double(s.total_reward) << '\n';
  }
  return out.str();
}

std::string plot_script(std::span<const fs::path> csv_files, std::string_view column) {
  const auto header = std::string(kCsvHeader);
  int col = 0;
  {
    int idx = 1;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = header.find(',', start);
      if (header.substr(start, comma - start) == column) col = idx;
      if (comma == std::string::npos) break;
      start = comma + 1;
      ++idx;
    }
  }
  if (col == 0) throw Error(ErrorCode::kConfig, "unknown csv column '" + std::string(column) + "'");

  std::ostringstream out;
  out << "set datafile separator ','\n"
      << "set key autotitle columnhead\n"
      << "set xlabel 'iteration'\n"
      << "set ylabel '" << column << "'\n"
      << "plot ";
  for (std::size_t i = 0; i < csv_files.size(); ++i) {
    if (i != 0) out << ", \\\n     ";
    out << "'" << csv_files[i].string() << "' using 2:" << col << " with lines title '"
        << csv_files[i].stem().string() << "'";
  }
  out << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Config

namespace {

LearningParams params_from_json(const json& j, LearningParams base) {
  if (j.contains("alpha")) base.alpha = j.at("alpha").get<double>();
  if (j.contains("gamma")) base.gamma = j.at("gamma").get<double>();
  if (j.contains("epsilon")) base.epsilon = j.at("epsilon").get<double>();
  if (j.contains("epsilon_decay")) base.epsilon_decay = j.at("epsilon_decay").get<double>();
  if (j.contains("epsilon_min")) base.epsilon_min = j.at("epsilon_min").get<double>();
  return base;
}

}  // namespace

ExperimentSpec parse_experiment_config(std::string_view json_text) {
  ExperimentSpec spec;
  try {
    const json cfg = json::parse(json_text);
    if (!cfg.is_object()) throw Error(ErrorCode::kConfig, "config must be a JSON object");
    static const std::set<std::string> kKnown = {
        "master_seed", "iterations_total", "metrics_every", "output_dir", "transport", "schedule",
        "arena",       "params",           "pace_ms",       "nodes",      "federation"};
    for (const auto& [key, _] : cfg.items()) {
      if (!kKnown.count(key)) throw Error(ErrorCode::kConfig, "unknown config key '" + key + "'");
    }

    spec.master_seed = cfg.value("master_seed", spec.master_seed);
    spec.iterations_total = cfg.value("iterations_total", spec.iterations_total);
    spec.metrics_every = cfg.value("metrics_every", spec.metrics_every);
    spec.output_dir = cfg.value("output_dir", spec.output_dir.string());

    const std::string transport = cfg.value("transport", std::string("inproc"));
    if (transport == "inproc") {
      spec.transport = Transport::kInProcess;
    } else if (transport == "tcp") {
      spec.transport = Transport::kTcp;
    } else {
      throw Error(ErrorCode::kConfig, "transport must be inproc or tcp");
    }
    const std::string schedule = cfg.value("schedule", std::string("lockstep"));
    if (schedule == "lockstep") {
      spec.schedule = Schedule::kLockstep;
    } else if (schedule == "free") {
      spec.schedule = Schedule::kFreeRunning;
    } else {
      throw Error(ErrorCode::kConfig, "schedule must be lockstep or free");
    }

    ArenaShape default_arena;
    if (cfg.contains("arena")) {
      default_arena.width = cfg["arena"].value("width", default_arena.width);
      default_arena.height = cfg["arena"].value("height", default_arena.height);
    }
    const LearningParams default_params =
        cfg.contains("params") ? params_from_json(cfg["params"], LearningParams{})
                               : LearningParams{};
    const auto pace = cfg.value("pace_ms", std::uint32_t{0});

    if (!cfg.contains("nodes") || !cfg["nodes"].is_array()) {
      throw Error(ErrorCode::kConfig, "config needs a 'nodes' array");
    }
    NodeId next_id = 1;
    for (const json& n : cfg["nodes"]) {
      NodeConfig node;
      node.node_id = n.value("id", next_id);
      next_id = node.node_id + 1;
      node.algorithm = parse_algorithm(n.value("algorithm", std::string("qlearning")));
      node.arena = default_arena;
      node.arena.width = n.value("width", default_arena.width);
      node.arena.height = n.value("height", default_arena.height);
      node.arena.num_blocks = n.value("blocks", 0);
      node.seed = n.contains("seed") ? n["seed"].get<std::uint64_t>()
                                     : node_seed(spec.master_seed, node.node_id);
      node.params = n.contains("params") ? params_from_json(n["params"], default_params)
                                         : default_params;
      node.iterations_total = spec.iterations_total;
      node.metrics_every = spec.metrics_every;
      node.pace_ms = pace;
      spec.nodes.push_back(node);
    }

    if (cfg.contains("federation")) {
      const json& f = cfg["federation"];
      if (f.is_string()) {
        if (f.get<std::string>() != "standalone") {
          throw Error(ErrorCode::kConfig, "federation must be an object or \"standalone\"");
        }
      } else {
        FederationSettings fed;
        fed.respite_m = f.value("respite", fed.respite_m);
        fed.method = parse_aggregation_method(f.value("method", std::string("avg")));
        if (f.contains("rounds_max") && !f["rounds_max"].is_null()) {
          fed.rounds_max = f["rounds_max"].get<std::uint64_t>();
        }
        if (f.contains("saturation_tolerance") && !f["saturation_tolerance"].is_null()) {
          fed.saturation_tolerance = f["saturation_tolerance"].get<double>();
        }
        if (f.contains("agents")) {
          fed.agents.clear();
          for (const json& a : f["agents"]) {
            AgentSpec agent;
            if (a.contains("tag") && !a["tag"].is_null()) {
              agent.tag = parse_algorithm(a["tag"].get<std::string>());
            }
            fed.agents.push_back(agent);
          }
        }
        spec.federation = fed;
      }
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("bad config: ") + e.what());
  }
  spec.validate();
  return spec;
}

ExperimentSpec load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str());
}

}  // namespace dfrl
