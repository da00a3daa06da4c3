#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "mock_server.hpp"
#include "spoofchain/cli.hpp"
#include "spoofchain/config.hpp"
#include "spoofchain/corpus.hpp"
#include "spoofchain/report.hpp"
#include "spoofchain/simulator.hpp"

using namespace spoofchain;
using spoofchain::testing::FakeClock;
using spoofchain::testing::MockConnector;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args, CliSeams seams = {}) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err, seams);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("spoofchain-cli-" + std::to_string(::getpid()) + "-" +
                                       ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
    ::unsetenv("SPOOFCHAIN_CONFIG");
  }
  void TearDown() override {
    ::unsetenv("SPOOFCHAIN_CONFIG");
    fs::remove_all(dir);
  }
  fs::path dir;
};

const fs::path kFixtures = fs::path(SPOOFCHAIN_SOURCE_DIR) / "fixtures";

}  // namespace

TEST_F(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(cli({"--help"}).code, 0);
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"bogus"}).code, kExitUsage);
  EXPECT_EQ(cli({"gen"}).code, kExitUsage);
  EXPECT_EQ(cli({"gen", "--attack", "A15"}).code, kExitUsage);
  EXPECT_EQ(cli({"simulate", "--scenario", "no-such-thing"}).code, kExitUsage);
  EXPECT_EQ(cli({"simulate", "--format", "xml"}).code, kExitUsage);
  EXPECT_EQ(cli({"report"}).code, kExitUsage);
  auto r = cli({"gen", "--attack", "A3", "--mail-from", "x@y.com", "--out", (dir / "c").string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("unsupported-knob"), std::string::npos);
}

TEST_F(Cli, GenWritesTheLibraryCorpus) {
  auto r = cli({"gen", "--attack", "A1,A6", "--all-variants", "--case2", "--seed", "7", "--out", (dir / "c").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto cases = import_corpus(dir / "c");
  Knobs k;
  k.seed = 7;
  std::vector<AttackCase> want;
  want.push_back(generate(AttackId::A1, {}, k));
  for (int v = 0; v < variant_count(AttackId::A6); ++v) {
    k.variant = v;
    want.push_back(generate(AttackId::A6, {}, k));
  }
  want.push_back(forwarding_case());
  ASSERT_EQ(cases.size(), want.size());
  for (std::size_t i = 0; i < cases.size(); ++i) {
    EXPECT_EQ(cases[i].name(), want[i].name());
    EXPECT_EQ(cases[i].messages, want[i].messages) << cases[i].name();
  }
}

TEST_F(Cli, GenCombineAndIncompatible) {
  EXPECT_EQ(cli({"gen", "--attack", "A2,A4", "--combine", "--out", (dir / "ok").string()}).code, 0);
  EXPECT_EQ(import_corpus(dir / "ok").at(0).name(), "A2+A4");
  auto r = cli({"gen", "--attack", "A1,A2", "--combine", "--out", (dir / "bad").string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("incompatible-combination"), std::string::npos);
}

TEST_F(Cli, GenMutation) {
  ASSERT_EQ(cli({"gen", "--attack", "A7", "--mutate", "repeat-header", "--locus", "Subject", "--out",
                 (dir / "m").string()}).code,
            0);
  auto c = import_corpus(dir / "m").at(0);
  EXPECT_EQ(c.messages[0], mutate(generate(AttackId::A7, {}).messages[0], Mutation::repeat_header, "Subject", 1));
  EXPECT_EQ(cli({"gen", "--attack", "A7", "--mutate", "repeat-header", "--locus", "X-None", "--out",
                 (dir / "n").string()}).code,
            kExitUsage);
}

TEST_F(Cli, SimulateMatchesRunChain) {
  ASSERT_EQ(cli({"gen", "--attack", "all", "--witnesses", "--out", (dir / "c").string()}).code, 0);
  auto r = cli({"simulate", "--corpus", (dir / "c").string(), "--scenario", "qq", "--out", (dir / "o").string()});
  ASSERT_EQ(r.code, 0) << r.err;

  auto sc = builtin_scenario("qq");
  std::vector<ChainReport> want;
  for (const auto& c : import_corpus(dir / "c")) {
    auto rs = run_chain(c, sc);
    want.insert(want.end(), rs.begin(), rs.end());
  }
  auto got = reports_from_json(read_file(dir / "o" / "reports.json"));
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got[i].case_id, want[i].case_id);
    EXPECT_EQ(got[i].success, want[i].success) << got[i].case_id;
  }
  auto matrix = aggregate(want);
  EXPECT_EQ(read_file(dir / "o" / "matrix.txt"), emit(matrix, ReportFormat::text));
  EXPECT_EQ(read_file(dir / "o" / "matrix.json"), emit(matrix, ReportFormat::json));
  EXPECT_NE(r.out.find(emit(matrix, ReportFormat::text)), std::string::npos);
}

TEST_F(Cli, SimulateExitsZeroWhenAttacksSucceed) {
  auto r = cli({"simulate", "--case1", "--scenario", "yahoo-to-icloud"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("SUCCESS A2+A4"), std::string::npos) << r.out;
}

TEST_F(Cli, SimulateFromScenarioFile) {
  auto file = (kFixtures / "scenarios" / "netease.scenario").string();
  auto r = cli({"simulate", "--attack", "A13", "--witnesses", "--scenario", file, "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto reports = reports_from_json(r.out);
  ASSERT_FALSE(reports.empty());
  EXPECT_TRUE(reports.back().success);
  ASSERT_TRUE(reports.back().rendering);
  EXPECT_EQ(reports.back().rendering->displayed_address, "admin@gmail.com");
}

TEST_F(Cli, ZoneOverrideAndMissingZone) {
  // Without a DMARC record for a.com the receiver has no policy to enforce.
  auto zone = read_file(kFixtures / "zone.txt");
  std::string stripped;
  std::istringstream in(zone);
  for (std::string line; std::getline(in, line);) {
    if (line.find("_dmarc.a.com") == std::string::npos) stripped += line + "\n";
  }
  write_file(dir / "zone.txt", stripped);
  auto base = cli({"simulate", "--attack", "A7", "--scenario", "strict-rfc", "--format", "json"});
  auto over = cli({"simulate", "--attack", "A7", "--scenario", "strict-rfc", "--format", "json", "--zone",
                   (dir / "zone.txt").string()});
  ASSERT_EQ(base.code, 0);
  ASSERT_EQ(over.code, 0) << over.err;
  auto b = reports_from_json(base.out).back();
  auto o = reports_from_json(over.out).back();
  ASSERT_TRUE(b.receiving && o.receiving);
  EXPECT_EQ(b.receiving->effective_dmarc, DmarcResult::fail);
  EXPECT_EQ(o.receiving->effective_dmarc, DmarcResult::none);
  EXPECT_EQ(cli({"simulate", "--zone", (dir / "missing.txt").string()}).code, kExitEnvironment);
}

TEST_F(Cli, ConfigFromEnvironment) {
  write_file(dir / "harness.conf", "default_scenario = netease\noutput_dir = " + (dir / "out").string() + "\n");
  ::setenv("SPOOFCHAIN_CONFIG", (dir / "harness.conf").string().c_str(), 1);
  auto r = cli({"simulate", "--attack", "A13", "--witnesses"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("SUCCESS A13 [netease]"), std::string::npos) << r.out;
  ASSERT_EQ(cli({"gen", "--attack", "A1"}).code, 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "corpus" / "manifest.json"));

  write_file(dir / "bad.conf", "colour = blue\n");
  EXPECT_EQ(cli({"--config", (dir / "bad.conf").string(), "simulate"}).code, kExitUsage);
}

TEST_F(Cli, ReportReadsSimulateOutput) {
  ASSERT_EQ(cli({"simulate", "--case2", "--scenario", "aliyun-forward-gmail", "--out", (dir / "o").string()}).code, 0);
  auto r = cli({"report", "--input", (dir / "o" / "reports.json").string(), "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto m = parse_matrix_json(r.out);
  ASSERT_EQ(m.rows.size(), 1u);
  EXPECT_EQ(m.rows[0].cells[Stage::forwarding], std::vector<AttackId>{AttackId::A10});
  auto t = cli({"report", "--input", (dir / "o" / "reports.json").string()});
  EXPECT_NE(t.out.find("Advisories"), std::string::npos);
  EXPECT_EQ(cli({"report", "--input", (dir / "none.json").string()}).code, kExitEnvironment);
}

TEST_F(Cli, LiveRefusesWithoutConsent) {
  MockConnector net;
  FakeClock fake_clock;
  RateLimiter limiter;
  write_file(dir / "target.conf", "smtp_host = mx.lab.test\nsmtp_port = 2525\n");
  auto r = cli({"live", "--target-config", (dir / "target.conf").string(), "--attack", "A3", "--out",
                (dir / "t").string()},
               {&net, &fake_clock, &limiter});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("consent"), std::string::npos);
  EXPECT_EQ(net.connects, 0);
  EXPECT_TRUE(net.state.received.empty());
}

TEST_F(Cli, LiveWritesTranscriptPerAttempt) {
  MockConnector net;
  FakeClock fake_clock;
  RateLimiter limiter;
  write_file(dir / "target.conf", "smtp_host = mx.lab.test\nsmtp_port = 2525\nconsent_ack = true\n");
  auto start = fake_clock.now();
  auto r = cli({"live", "--target-config", (dir / "target.conf").string(), "--attack", "A3", "--repeat", "3",
                "--out", (dir / "t").string()},
               {&net, &fake_clock, &limiter});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(net.connects, 3);
  EXPECT_GE(fake_clock.now() - start, std::chrono::seconds(1200));
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir / "t")) {
    ++files;
    auto tr = Transcript::parse(read_file(e.path()));
    EXPECT_EQ(tr.protocol, "smtp");
    EXPECT_NE(tr.client_bytes().find("MAIL FROM:<>"), std::string::npos);
  }
  EXPECT_EQ(files, 3);
}

TEST_F(Cli, LiveRejectionIsEnvironmentError) {
  MockConnector net;
  net.state.reject_command = "RCPT";
  FakeClock fake_clock;
  RateLimiter limiter;
  write_file(dir / "target.conf", "smtp_host = mx.lab.test\nsmtp_port = 2525\nconsent_ack = true\n");
  auto r = cli({"live", "--target-config", (dir / "target.conf").string(), "--attack", "A7", "--out",
                (dir / "t").string()},
               {&net, &fake_clock, &limiter});
  EXPECT_EQ(r.code, kExitEnvironment);
  EXPECT_NE(r.err.find("rejected-at-RCPT(550)"), std::string::npos) << r.err;
}
