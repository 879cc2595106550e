// dfrl: experiment runner, node daemon and federation driver.

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

#include "dfrl/error.hpp"
#include "dfrl/experiment.hpp"
#include "dfrl/float_format.hpp"
#include "dfrl/node.hpp"
#include "dfrl/tcp.hpp"

namespace fs = std::filesystem;
using namespace dfrl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

ArenaShape parse_arena(const std::string& text) {
  ArenaShape shape;
  char x1 = 0;
  char x2 = 0;
  std::istringstream in(text);
  if (!(in >> shape.width >> x1 >> shape.height >> x2 >> shape.num_blocks) || x1 != 'x' ||
      x2 != 'x' || !in.eof()) {
    throw Error(ErrorCode::kConfig, "--arena expects WxHxB, got '" + text + "'");
  }
  return shape;
}

LearningParams parse_params(const std::string& text) {
  std::vector<double> v;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = text.find(',', start);
    const auto value = parse_double(std::string_view(text).substr(start, comma - start));
    if (!value) throw Error(ErrorCode::kConfig, "--params expects five numbers, got '" + text + "'");
    v.push_back(*value);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (v.size() != 5) {
    throw Error(ErrorCode::kConfig, "--params expects alpha,gamma,eps,decay,min");
  }
  LearningParams p{v[0], v[1], v[2], v[3], v[4]};
  p.validate();
  return p;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = text.find(',', start);
    out.push_back(text.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------

struct RunArgs {
  std::string config;
  std::string output_dir;
  std::string transport;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

int cmd_run(const RunArgs& args) {
  ExperimentSpec spec = load_experiment_config(args.config);
  if (!args.output_dir.empty()) spec.output_dir = args.output_dir;
  if (args.transport == "tcp") spec.transport = Transport::kTcp;
  if (args.transport == "inproc") spec.transport = Transport::kInProcess;
  if (args.seed) {
    spec.master_seed = *args.seed;
    for (auto& n : spec.nodes) n.seed = node_seed(spec.master_seed, n.node_id);
  }
  spec.node_executable = fs::read_symlink("/proc/self/exe");

  RunHooks hooks;
  if (!args.quiet) hooks.log = [](const std::string& line) { std::cerr << line << '\n'; };
  const ExperimentResult result = run_experiment(spec, hooks);

  std::cout << "wrote " << result.csv_files.size() << " csv files and "
            << result.manifest.string() << '\n';
  for (const auto& f : result.failures) std::cerr << "failure: " << f << '\n';
  return result.ok() ? kExitOk : kExitRuntime;
}

// ---------------------------------------------------------------------------

struct NodeArgs {
  NodeId node_id = 1;
  std::string listen = "127.0.0.1:0";
  std::string algo = "q";
  std::string arena = "12x12x0";
  std::uint64_t seed = 0;
  std::string params = "0.1,0.9,0.3,0.9995,0.05";
  std::uint64_t iterations = 25'000;
  std::uint64_t metrics_every = 100;
  std::uint32_t pace_ms = 0;
  bool free_running = false;
};

int cmd_node(const NodeArgs& args) {
  NodeConfig cfg;
  cfg.node_id = args.node_id;
  cfg.listen_address = args.listen;
  cfg.algorithm = parse_algorithm(args.algo);
  cfg.arena = parse_arena(args.arena);
  cfg.seed = args.seed;
  cfg.params = parse_params(args.params);
  cfg.iterations_total = args.iterations;
  cfg.metrics_every = args.metrics_every;
  cfg.pace_ms = args.pace_ms;
  cfg.validate();

  Node node(cfg);
  NodeServer server(node, parse_endpoint(cfg.listen_address));
  std::cout << "listening " << server.endpoint().to_string() << std::endl;

  std::thread learner;
  if (args.free_running) {
    learner = std::thread([&] {
      while (!server.stopping() && node.advance(1) == 1) {
      }
    });
  }
  server.wait();
  if (learner.joinable()) learner.join();
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct AgentArgs {
  std::string nodes;
  std::string method = "avg";
  std::uint64_t respite = 500;
  std::optional<std::uint64_t> rounds;
  std::vector<std::string> tags;
  std::string schedule = "lockstep";
  std::uint64_t iterations = 25'000;
  std::string output_dir;
  bool shutdown = false;
  bool quiet = false;
};

int cmd_agent(const AgentArgs& args) {
  std::vector<std::unique_ptr<TcpPeer>> peers;
  std::vector<ControlledNode*> handles;
  ExperimentSpec spec;
  for (const auto& address : split_list(args.nodes)) {
    const Endpoint ep = parse_endpoint(address);
    // Ask the daemon who it is.
    TcpPeer probe(0, Algorithm::kQLearning, ep);
    const NodeStatus st = probe.status();
    peers.push_back(std::make_unique<TcpPeer>(st.node_id, st.algorithm, ep));
    handles.push_back(peers.back().get());
    NodeConfig cfg;
    cfg.node_id = st.node_id;
    cfg.algorithm = st.algorithm;
    spec.nodes.push_back(cfg);
  }

  FederationSettings fed;
  fed.respite_m = args.respite;
  fed.rounds_max = args.rounds;
  fed.method = parse_aggregation_method(args.method);
  if (!args.tags.empty()) {
    fed.agents.clear();
    for (const auto& t : args.tags) {
      fed.agents.push_back({t == "any" ? std::nullopt : std::optional(parse_algorithm(t))});
    }
  }
  spec.federation = fed;
  spec.iterations_total = args.iterations;
  const auto log = [&](const std::string& line) {
    if (!args.quiet) std::cerr << line << '\n';
  };

  int rc = kExitOk;
  if (args.schedule == "lockstep") {
    spec.schedule = Schedule::kLockstep;
    RunHooks hooks;
    hooks.log = log;
    hooks.write_files = false;
    ExperimentResult result = drive_experiment(spec, handles, hooks);
    if (!args.output_dir.empty()) {
      fs::create_directories(args.output_dir);
      for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
        emit_csv(result.records[i],
                 fs::path(args.output_dir) / ("node_" + std::to_string(spec.nodes[i].node_id) + ".csv"));
      }
    }
    for (const auto& f : result.failures) std::cerr << "failure: " << f << '\n';
    if (!result.ok()) rc = kExitRuntime;
  } else if (args.schedule == "free") {
    // Daemons learn on their own (started with --free); rounds follow the
    // initiator's iteration counter.
    std::vector<NodeDescriptor> descriptors;
    for (auto* h : handles) descriptors.push_back({h->id(), h->algorithm()});
    struct Run {
      MobileAgent agent;
      std::vector<FederationPeer*> peers;
    };
    std::vector<Run> runs;
    std::uint64_t agent_id = 1;
    for (const auto& a : fed.agents) {
      Run run;
      auto itinerary = filter_itinerary(descriptors, a.tag);
      for (NodeId id : itinerary) {
        for (auto* h : handles) {
          if (h->id() == id) run.peers.push_back(h);
        }
      }
      run.agent = make_agent(agent_id++, std::move(itinerary), fed.method, a.tag);
      runs.push_back(std::move(run));
    }
    auto* initiator = static_cast<ControlledNode*>(runs.front().peers.front());
    std::uint64_t boundary = fed.respite_m;
    std::uint64_t completed = 0;
    for (;;) {
      const NodeStatus st = initiator->status();
      if (st.iteration >= boundary) {
        for (auto& run : runs) log(format_round_report(run_round(run.peers, run.agent)));
        boundary += fed.respite_m;
        ++completed;
        if (fed.rounds_max && completed >= *fed.rounds_max) break;
      } else if (st.finished) {
        break;
      } else {
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
      }
    }
  } else {
    throw Error(ErrorCode::kConfig, "--schedule must be lockstep or free");
  }

  if (args.shutdown) {
    for (auto& p : peers) p->shutdown();
  }
  return rc;
}

// ---------------------------------------------------------------------------

int cmd_summarize(const std::vector<std::string>& files) {
  std::vector<fs::path> paths(files.begin(), files.end());
  std::cout << format_summary(summarize(paths));
  return kExitOk;
}

int cmd_plot_script(const std::vector<std::string>& files, const std::string& column) {
  std::vector<fs::path> paths(files.begin(), files.end());
  std::cout << plot_script(paths, column);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGPIPE, SIG_IGN);

  CLI::App app{"Decentralized federated reinforcement learning via a migrating agent"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config");
  run->add_option("-c,--config", run_args.config, "Experiment config file")->required();
  run->add_option("-o,--output-dir", run_args.output_dir, "Override output directory");
  run->add_option("--transport", run_args.transport, "Override transport")
      ->check(CLI::IsMember({"inproc", "tcp"}));
  run->add_option("--seed", run_args.seed, "Override master seed");
  run->add_flag("-q,--quiet", run_args.quiet, "Suppress round log lines");

  NodeArgs node_args;
  auto* node = app.add_subcommand("node", "Start one node daemon");
  node->add_option("--node-id", node_args.node_id)->envname("DFRL_NODE_ID");
  node->add_option("--listen", node_args.listen, "host:port (port 0 picks a free port)")
      ->envname("DFRL_LISTEN");
  node->add_option("--algo", node_args.algo, "q | sarsa")->envname("DFRL_ALGO");
  node->add_option("--arena", node_args.arena, "WxHxB")->envname("DFRL_ARENA");
  node->add_option("--seed", node_args.seed)->envname("DFRL_SEED");
  node->add_option("--params", node_args.params, "alpha,gamma,eps,decay,min")
      ->envname("DFRL_PARAMS");
  node->add_option("--iterations", node_args.iterations)->envname("DFRL_ITERATIONS");
  node->add_option("--metrics-every", node_args.metrics_every)->envname("DFRL_METRICS_EVERY");
  node->add_option("--pace-ms", node_args.pace_ms, "Delay per iteration (64 restores the robots' tick)")
      ->envname("DFRL_PACE_MS");
  node->add_flag("--free", node_args.free_running, "Learn continuously instead of on barrier requests")
      ->envname("DFRL_FREE");

  AgentArgs agent_args;
  auto* agent = app.add_subcommand("agent", "Drive federation rounds against running daemons");
  agent->add_option("--nodes", agent_args.nodes, "Comma-separated host:port itinerary")->required();
  agent->add_option("--method", agent_args.method, "avg | running-mean | max");
  agent->add_option("--respite", agent_args.respite, "Iterations between rounds");
  agent->add_option("--rounds", agent_args.rounds, "Stop after this many rounds");
  agent->add_option("--tag", agent_args.tags, "Agent algorithm tag (repeat for several agents)");
  agent->add_option("--schedule", agent_args.schedule, "lockstep | free");
  agent->add_option("--iterations", agent_args.iterations, "Lockstep run length");
  agent->add_option("-o,--output-dir", agent_args.output_dir, "Write metrics CSVs here");
  agent->add_flag("--shutdown", agent_args.shutdown, "Stop the daemons afterwards");
  agent->add_flag("-q,--quiet", agent_args.quiet);

  std::vector<std::string> summarize_files;
  auto* summarize = app.add_subcommand("summarize", "Summarize metrics CSVs");
  summarize->add_option("files", summarize_files)->required();

  std::vector<std::string> plot_files;
  std::string plot_column = "sum_q";
  auto* plot = app.add_subcommand("plot-script", "Emit a gnuplot script for metrics CSVs");
  plot->add_option("files", plot_files)->required();
  plot->add_option("--column", plot_column, "sum_q | cumulative_reward");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*node) return cmd_node(node_args);
    if (*agent) return cmd_agent(agent_args);
    if (*summarize) return cmd_summarize(summarize_files);
    if (*plot) return cmd_plot_script(plot_files, plot_column);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::kConfig || e.code() == ErrorCode::kInfeasibleArena ||
                   e.code() == ErrorCode::kInvalidArgument
               ? kExitConfig
               : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}
