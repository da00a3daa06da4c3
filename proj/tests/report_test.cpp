#include <gtest/gtest.h>

#include "json.hpp"
#include "spoofchain/report.hpp"
#include "spoofchain/text.hpp"

using namespace spoofchain;

namespace {

std::vector<ChainReport> run(const AttackCase& c, const std::string& scenario) {
  return run_chain(c, builtin_scenario(scenario));
}

std::vector<ChainReport> witness_reports() {
  std::vector<ChainReport> all;
  for (auto id : all_attack_ids()) {
    for (const auto& sc : {witness(id).scenario, std::string("strict-rfc")}) {
      auto r = run(witness_case(id), sc);
      all.insert(all.end(), r.begin(), r.end());
    }
  }
  return all;
}

const MatrixRow* row(const ResultMatrix& m, std::string_view name) {
  for (const auto& r : m.rows) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

}  // namespace

TEST(Aggregate, A13UnderNeteaseIsRendering) {
  auto m = aggregate(run(witness_case(AttackId::A13), "netease"));
  auto* r = row(m, "netease-like");
  ASSERT_NE(r, nullptr);
  EXPECT_EQ(r->cells.at(Stage::rendering), std::vector{AttackId::A13});
  EXPECT_TRUE(r->cells.at(Stage::receiving).empty());
  EXPECT_TRUE(r->deployment.sic);
}

TEST(Aggregate, EmptySuccessSet) {
  auto m = aggregate(run(witness_case(AttackId::A4), "strict-rfc"));
  ASSERT_EQ(m.rows.size(), 1u);
  for (auto s : {Stage::sending, Stage::receiving, Stage::forwarding, Stage::rendering}) {
    EXPECT_TRUE(m.rows[0].cells.at(s).empty());
  }
  auto json = emit(m, ReportFormat::json);
  EXPECT_EQ(parse_matrix_json(json), m);
  EXPECT_EQ(parse_matrix_json(emit(ResultMatrix{}, ReportFormat::json)), ResultMatrix{});
}

TEST(Aggregate, Case2SplitsAcrossReceivingAndForwarding) {
  auto m = aggregate(run(forwarding_case(), "aliyun-forward-gmail"));
  auto* r = row(m, "gmail-like");
  ASSERT_NE(r, nullptr);
  EXPECT_EQ(r->cells.at(Stage::receiving), (std::vector{AttackId::A2, AttackId::A3}));
  EXPECT_EQ(r->cells.at(Stage::forwarding), std::vector{AttackId::A10});
  EXPECT_TRUE(r->cells.at(Stage::sending).empty());
}

TEST(Aggregate, Case1CreditsSendingAndReceiving) {
  auto m = aggregate(run(shared_mta_case(), "yahoo-to-icloud"));
  auto* r = row(m, "icloud-like");
  ASSERT_NE(r, nullptr);
  EXPECT_EQ(r->cells.at(Stage::sending), std::vector{AttackId::A2});
  EXPECT_EQ(r->cells.at(Stage::receiving), std::vector{AttackId::A4});
}

TEST(Aggregate, CellsOnlyHoldSuccesses) {
  auto reports = witness_reports();
  auto m = aggregate(reports);
  for (const auto& r : m.rows) {
    for (const auto& [stage, ids] : r.cells) {
      for (auto id : ids) {
        bool found = std::any_of(reports.begin(), reports.end(), [&](const ChainReport& c) {
          return c.success && c.profile_name == r.name && std::find(c.ids.begin(), c.ids.end(), id) != c.ids.end();
        });
        EXPECT_TRUE(found) << r.name << " " << to_string(id);
      }
    }
  }
  EXPECT_EQ(row(m, "strict-rfc")->cells.at(Stage::receiving), std::vector<AttackId>{});
}

TEST(Emit, TextTableKeepsLongNames) {
  ResultMatrix m;
  for (int i = 0; i < 30; ++i) {
    MatrixRow r;
    r.name = "profile-with-a-rather-long-name-" + std::to_string(i);
    for (auto s : {Stage::sending, Stage::receiving, Stage::forwarding, Stage::rendering}) r.cells[s] = {};
    r.cells[Stage::rendering] = {AttackId::A12, AttackId::A13, AttackId::A14};
    m.rows.push_back(r);
  }
  auto table = emit(m, ReportFormat::text);
  std::size_t width = 0;
  int lines = 0;
  for (const auto& line : spoofchain::text::split(table, '\n')) {
    if (line.empty()) continue;
    ++lines;
    if (width == 0) width = line.size();
    EXPECT_EQ(line.size(), width) << line;
  }
  EXPECT_EQ(lines, 32);  // header, rule, 30 rows
  EXPECT_NE(table.find("profile-with-a-rather-long-name-29"), std::string::npos);
  EXPECT_NE(table.find("A12, A13, A14"), std::string::npos);
}

TEST(Emit, JsonIsVersioned) {
  auto j = nlohmann::json::parse(emit(aggregate(witness_reports()), ReportFormat::json));
  EXPECT_EQ(j.at("schema_version"), 1);
  EXPECT_TRUE(j.at("rows").is_array());
  auto doc = nlohmann::json::parse(report_document(run(shared_mta_case(), "yahoo-to-icloud")));
  EXPECT_EQ(doc.at("schema_version"), 1);
  EXPECT_TRUE(doc.contains("matrix"));
  EXPECT_TRUE(doc.contains("reports"));
  EXPECT_TRUE(doc.contains("advisories"));
}

TEST(Emit, ReportsRoundTrip) {
  auto reports = witness_reports();
  auto r2 = run(forwarding_case(), "aliyun-forward-gmail");
  reports.insert(reports.end(), r2.begin(), r2.end());
  auto back = reports_from_json(reports_to_json(reports));
  ASSERT_EQ(back.size(), reports.size());
  EXPECT_EQ(reports_to_json(back), reports_to_json(reports));
  EXPECT_EQ(aggregate(back), aggregate(reports));
}

TEST(Advise, ForwarderSigning) {
  auto r = run(witness_case(AttackId::A10), "aliyun-forward-gmail").back();
  ASSERT_TRUE(r.success);
  auto adv = advise(r);
  EXPECT_TRUE(std::any_of(adv.begin(), adv.end(),
                          [](const std::string& a) { return a.find("DKIM") != std::string::npos; }));
}

TEST(Advise, Homograph) {
  auto r = run(witness_case(AttackId::A12), "icloud").back();
  ASSERT_TRUE(r.success);
  auto adv = advise(r);
  EXPECT_TRUE(std::any_of(adv.begin(), adv.end(),
                          [](const std::string& a) { return a.find("homograph") != std::string::npos; }));
}

TEST(Advise, NothingForFailures) {
  EXPECT_TRUE(advise(run(witness_case(AttackId::A12), "strict-rfc").back()).empty());
}

TEST(Advise, EveryIdCovered) {
  for (auto id : all_attack_ids()) {
    ChainReport r;
    r.ids = {id};
    r.success = true;
    r.sic_enabled = true;
    EXPECT_FALSE(advise(r).empty()) << to_string(id);
  }
}
