#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <boost/asio/ip/tcp.hpp>
#include <gtest/gtest.h>

#include "cpf/record_io.hpp"
#include "cpf/scenario.hpp"
#include "cpf/teleop/session.hpp"

namespace cpf {
namespace {

namespace fs = std::filesystem;

const std::string kBinary = CPF_BINARY;
const fs::path kScenarios = CPF_SCENARIO_DIR;

struct Result {
  int code = -1;
  std::string out;
};

Result cpf_cli(const std::string& args) {
  const std::string command = kBinary + " " + args + " 2>&1";
  Result r;
  FILE* pipe = ::popen(command.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe) != nullptr) r.out += buf;
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("cpf_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_scenario(const std::string& name, const Scenario& s) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << to_json(s).dump(2);
    return p;
  }

  fs::path dir_;
};

TEST_F(CliTest, RunWritesRecordAndMetrics) {
  const Result r = cpf_cli("run " + (kScenarios / "fig5_cc.json").string() + " --out " +
                           dir_.string());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("status=completed"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(dir_ / "run.jsonl"));
  const std::string csv = slurp(dir_ / "metrics.csv");
  EXPECT_EQ(csv.rfind("seed,mode,", 0), 0u);
  EXPECT_NE(csv.find("\n1,CC,"), std::string::npos) << csv;
}

TEST_F(CliTest, ReplayReproducesSessionRecord) {
  const Scenario s = load_scenario_file(kScenarios / "fig5_cc.json");
  teleop::TeleopSession session(s);
  for (int k = 0; k < 300; ++k) {
    if (k % 5 == 0) session.apply({k, teleop::StickInput{0.7, k < 150 ? 0.3 : -0.2}});
    if (k == 100) session.apply({std::nullopt, teleop::OverrideInput{true}});
    session.step();
  }
  const teleop::SessionResult live = session.finish();
  const fs::path trace = dir_ / "inputs.jsonl";
  std::ofstream(trace) << teleop::trace_jsonl(live.trace);
  const Result r = cpf_cli("run " + (kScenarios / "fig5_cc.json").string() + " --replay " +
                           trace.string() + " --out " + dir_.string());
  EXPECT_EQ(r.code, 0) << r.out;  // the run is unfinished but not a timeout
  EXPECT_EQ(slurp(dir_ / "run.jsonl"), run_jsonl(live.record));

  const Result wrong = cpf_cli("run " + (kScenarios / "fig5_mc.json").string() + " --replay " +
                               trace.string() + " --out " + dir_.string());
  EXPECT_EQ(wrong.code, 1) << wrong.out;
}

TEST_F(CliTest, TimeoutExitsTwo) {
  Scenario s = default_scenario();
  s.max_duration = 1.0;
  const Result r = cpf_cli("run " + write_scenario("short.json", s).string() + " --out " +
                           dir_.string());
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_NE(r.out.find("status=timeout"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "metrics.csv"));
}

TEST_F(CliTest, MalformedScenarioExitsOne) {
  const fs::path bad = dir_ / "bad.json";
  std::ofstream(bad) << "{\n  \"dt\": 0.01,,\n}";
  const Result r = cpf_cli("run " + bad.string() + " --out " + dir_.string());
  EXPECT_EQ(r.code, 1) << r.out;
  EXPECT_NE(r.out.find("bad.json:2:"), std::string::npos) << r.out;
  EXPECT_FALSE(fs::exists(dir_ / "run.jsonl"));
}

TEST_F(CliTest, UnknownKeyExitsOne) {
  nlohmann::json doc = to_json(default_scenario());
  doc["haptics"]["rumble"] = true;
  const fs::path p = dir_ / "unknown.json";
  std::ofstream(p) << doc.dump();
  const Result r = cpf_cli("run " + p.string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("haptics.rumble"), std::string::npos) << r.out;
}

TEST_F(CliTest, UsageErrorsExitOne) {
  EXPECT_EQ(cpf_cli("").code, 1);
  EXPECT_EQ(cpf_cli("fly").code, 1);
  EXPECT_EQ(cpf_cli("run").code, 1);
  EXPECT_EQ(cpf_cli("compare " + (kScenarios / "fig5_cc.json").string() + " --seeds 3").code, 1);
  EXPECT_EQ(cpf_cli("compare " + (kScenarios / "fig5_cc.json").string() + " --seeds 5-1").code, 1);
}

TEST_F(CliTest, CompareIsByteDeterministic) {
  const std::string scenario = (kScenarios / "fig5_cc.json").string();
  const fs::path a = dir_ / "a";
  const fs::path b = dir_ / "b";
  const Result ra = cpf_cli("compare " + scenario + " --seeds 1-3 --jobs 3 --out " + a.string());
  const Result rb = cpf_cli("compare " + scenario + " --seeds 1-3 --jobs 1 --out " + b.string());
  EXPECT_EQ(ra.code, 0) << ra.out;
  EXPECT_EQ(rb.code, 0) << rb.out;
  const std::string csv = slurp(a / "compare.csv");
  EXPECT_EQ(csv, slurp(b / "compare.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
  EXPECT_NE(slurp(a / "summary.txt").find("pairs=3"), std::string::npos);
}

TEST_F(CliTest, BatchWritesOneCsvPerScenario) {
  Scenario s = default_scenario();
  s.max_duration = 5.0;
  const fs::path one = write_scenario("one.json", s);
  s.seed = 4;
  const fs::path two = write_scenario("two.json", s);
  const Result r = cpf_cli("batch " + one.string() + " " + two.string() + " --out " + dir_.string());
  EXPECT_EQ(r.code, 2) << r.out;  // both time out by design
  EXPECT_NE(slurp(dir_ / "one_batch.csv").find("\n1,MC,"), std::string::npos);
  EXPECT_NE(slurp(dir_ / "two_batch.csv").find("\n4,CC,"), std::string::npos);
}

TEST_F(CliTest, ValidateShippedScenarios) {
  std::string args = "validate";
  for (const auto& e : fs::directory_iterator(kScenarios)) {
    if (e.path().extension() == ".json") args += " " + e.path().string();
  }
  const Result r = cpf_cli(args);
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("fig5_cc.json: ok (hash " + scenario_hash(default_scenario()) + ")"),
            std::string::npos)
      << r.out;
  const fs::path bad = dir_ / "bad.json";
  std::ofstream(bad) << "[]";
  EXPECT_EQ(cpf_cli("validate " + bad.string()).code, 1);
}

TEST_F(CliTest, ServeRejectsBusyPort) {
  boost::asio::io_context ioc;
  boost::asio::ip::tcp::acceptor busy(
      ioc, boost::asio::ip::tcp::endpoint(boost::asio::ip::make_address("127.0.0.1"), 0));
  const auto port = busy.local_endpoint().port();
  const Result r = cpf_cli("serve " + (kScenarios / "fig5_cc.json").string() + " --port " +
                           std::to_string(port) + " --out " + dir_.string());
  EXPECT_EQ(r.code, 1) << r.out;
  EXPECT_NE(r.out.find("already in use"), std::string::npos) << r.out;
}

TEST_F(CliTest, ServeShutsDownCleanlyOnSigterm) {
  int fds[2];
  ASSERT_EQ(::pipe(fds), 0);
  const std::string scenario = (kScenarios / "fig5_cc.json").string();
  const std::string out = dir_.string();
  const pid_t pid = ::fork();
  ASSERT_GE(pid, 0);
  if (pid == 0) {
    ::dup2(fds[1], STDOUT_FILENO);
    ::close(fds[0]);
    ::close(fds[1]);
    ::execl(kBinary.c_str(), kBinary.c_str(), "serve", scenario.c_str(), "--port", "0", "--out",
            out.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(fds[1]);
  FILE* child_out = ::fdopen(fds[0], "r");
  char line[256] = {};
  ASSERT_NE(std::fgets(line, sizeof line, child_out), nullptr);
  EXPECT_EQ(std::string(line).rfind("listening on ws://127.0.0.1:", 0), 0u) << line;
  ::kill(pid, SIGTERM);
  int status = 0;
  ::waitpid(pid, &status, 0);
  std::fclose(child_out);
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
  EXPECT_TRUE(fs::exists(dir_ / "session_0_inputs.jsonl"));
}

}  // namespace
}  // namespace cpf
