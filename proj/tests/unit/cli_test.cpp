#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult dfrl(const std::string& args) {
  const std::string cmd = std::string(DFRL_EXE) + " " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  CliResult r;
  if (pipe == nullptr) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof(buf), pipe) != nullptr) r.out += buf;
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dfrl-cli-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

// Starts `dfrl node ...` and returns the endpoint it announces.
struct Daemon {
  FILE* pipe = nullptr;
  std::string endpoint;

  explicit Daemon(const std::string& args) {
    pipe = ::popen((std::string(DFRL_EXE) + " node " + args).c_str(), "r");
    char buf[256];
    if (pipe != nullptr && std::fgets(buf, sizeof(buf), pipe) != nullptr) {
      std::string line(buf);
      const std::string prefix = "listening ";
      if (line.rfind(prefix, 0) == 0) endpoint = line.substr(prefix.size());
      while (!endpoint.empty() && (endpoint.back() == '\n' || endpoint.back() == '\r')) {
        endpoint.pop_back();
      }
    }
  }
  ~Daemon() {
    if (pipe != nullptr) ::pclose(pipe);
  }
};

const char* kTinyConfig = R"({
  "master_seed": 5, "iterations_total": 2000, "metrics_every": 100,
  "nodes": [{"blocks": 1}, {"blocks": 2}, {"blocks": 0}],
  "federation": {"respite": 500, "method": "max"}
})";

}  // namespace

TEST(CliTest, HelpSucceeds) {
  const CliResult r = dfrl("--help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("run"), std::string::npos);
}

TEST(CliTest, RunWritesCsvsAndManifest) {
  const fs::path dir = scratch("run");
  write_file(dir / "cfg.json", kTinyConfig);
  const CliResult r = dfrl("run -q -c " + (dir / "cfg.json").string() + " -o " + (dir / "out").string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(dir / "out" / "node_1.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "node_3.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "manifest.json"));

  const CliResult s = dfrl("summarize " + (dir / "out" / "node_1.csv").string());
  EXPECT_EQ(s.code, 0) << s.out;
  EXPECT_NE(s.out.find("saturation_iteration"), std::string::npos);

  const CliResult p = dfrl("plot-script " + (dir / "out" / "node_1.csv").string() +
                     " --column cumulative_reward");
  EXPECT_EQ(p.code, 0);
  EXPECT_NE(p.out.find("using 2:5"), std::string::npos);
  fs::remove_all(dir);
}

TEST(CliTest, SeedOverrideChangesOutput) {
  const fs::path dir = scratch("seed");
  write_file(dir / "cfg.json", kTinyConfig);
  const std::string cfg = (dir / "cfg.json").string();
  ASSERT_EQ(dfrl("run -q -c " + cfg + " -o " + (dir / "a").string()).code, 0);
  ASSERT_EQ(dfrl("run -q -c " + cfg + " -o " + (dir / "b").string() + " --seed 6").code, 0);
  std::ifstream a(dir / "a" / "node_1.csv");
  std::ifstream b(dir / "b" / "node_1.csv");
  std::stringstream sa;
  std::stringstream sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  EXPECT_NE(sa.str(), sb.str());
  fs::remove_all(dir);
}

TEST(CliTest, ConfigErrorsExitTwo) {
  const fs::path dir = scratch("bad");
  write_file(dir / "unknown.json", R"({"nodes": [{}], "colour": "red"})");
  write_file(dir / "infeasible.json", R"({"nodes": [{"width": 4, "height": 4, "blocks": 5}]})");
  EXPECT_EQ(dfrl("run -c " + (dir / "unknown.json").string()).code, 2);
  EXPECT_EQ(dfrl("run -c " + (dir / "infeasible.json").string()).code, 2);
  EXPECT_EQ(dfrl("run -c " + (dir / "missing.json").string()).code, 2);
  EXPECT_EQ(dfrl("run").code, 2);
  EXPECT_EQ(dfrl("frobnicate").code, 2);
  EXPECT_EQ(dfrl("node --arena 4x4x9 --listen 127.0.0.1:0").code, 2);
  EXPECT_EQ(dfrl("node --algo dqn").code, 2);
  fs::remove_all(dir);
}

TEST(CliTest, MalformedCsvIsError) {
  const fs::path dir = scratch("csv");
  write_file(dir / "bad.csv", "x,y\n1,2\n");
  EXPECT_NE(dfrl("summarize " + (dir / "bad.csv").string()).code, 0);
  fs::remove_all(dir);
}

TEST(CliTest, AgentDrivesDaemons) {
  const fs::path dir = scratch("agent");
  Daemon a("--node-id 1 --listen 127.0.0.1:0 --arena 8x8x1 --seed 3 --iterations 1000");
  Daemon b("--node-id 2 --listen 127.0.0.1:0 --arena 8x8x2 --seed 4 --iterations 1000");
  ASSERT_FALSE(a.endpoint.empty());
  ASSERT_FALSE(b.endpoint.empty());
  const CliResult r = dfrl("agent -q --nodes " + a.endpoint + "," + b.endpoint +
                     " --method avg --respite 250 --iterations 1000 --shutdown -o " +
                     (dir / "out").string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(dir / "out" / "node_1.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "node_2.csv"));
  fs::remove_all(dir);
}

TEST(CliTest, AgentAgainstDeadNodeExitsThree) {
  const CliResult r = dfrl("agent -q --nodes 127.0.0.1:1 --iterations 100");
  EXPECT_EQ(r.code, 3) << r.out;
}

TEST(CliTest, NodeEnvironmentOverride) {
  // An invalid arena via the environment must be rejected like the flag.
  const CliResult r = dfrl("node --listen 127.0.0.1:0 --arena 4x4x9");
  EXPECT_EQ(r.code, 2);
  const std::string cmd = "DFRL_ARENA=4x4x9 " + std::string(DFRL_EXE) +
                          " node --listen 127.0.0.1:0 >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  EXPECT_EQ(WEXITSTATUS(status), 2);
}
