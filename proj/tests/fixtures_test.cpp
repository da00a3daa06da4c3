#include <gtest/gtest.h>

#include "spoofchain/config.hpp"
#include "spoofchain/error.hpp"
#include "spoofchain/simulator.hpp"

using namespace spoofchain;

namespace {

const std::filesystem::path kFixtures = std::filesystem::path(SPOOFCHAIN_SOURCE_DIR) / "fixtures";

}  // namespace

TEST(Fixtures, ProfileFilesMatchBuiltins) {
  for (const auto& [name, p] : builtin_profiles()) {
    auto file = kFixtures / "profiles" / (name + ".profile");
    ASSERT_TRUE(std::filesystem::exists(file)) << file;
    EXPECT_EQ(parse_profile(read_file(file)), p) << name;
  }
}

TEST(Fixtures, ScenarioFilesMatchBuiltins) {
  for (const auto& name : builtin_scenario_names()) {
    auto file = kFixtures / "scenarios" / (name + ".scenario");
    ASSERT_TRUE(std::filesystem::exists(file)) << file;
    auto loaded = load_scenario(file, kFixtures / "profiles");
    auto builtin = builtin_scenario(name);
    EXPECT_EQ(loaded.name, builtin.name);
    EXPECT_EQ(loaded.sender, builtin.sender) << name;
    EXPECT_EQ(loaded.receiver, builtin.receiver) << name;
    EXPECT_EQ(loaded.forwarder, builtin.forwarder) << name;
    EXPECT_EQ(loaded.render_profile(), builtin.render_profile()) << name;
    EXPECT_EQ(loaded.mta_ips, builtin.mta_ips);
    EXPECT_EQ(loaded.protected_domains, builtin.protected_domains);
    ASSERT_EQ(loaded.keys.size(), builtin.keys.size());
    for (const auto& [domain, key] : builtin.keys) {
      EXPECT_EQ(loaded.keys.at(domain).public_record, key.public_record) << domain;
    }
    auto* zone = dynamic_cast<const DnsZone*>(loaded.resolver.get());
    ASSERT_NE(zone, nullptr);
    EXPECT_EQ(zone->to_text(), fixture_zone()->to_text());
  }
}

TEST(Fixtures, ZoneCarriesKeyRecords) {
  for (const auto& [domain, key] : fixture_keys()) {
    auto answer = fixture_zone()->query(key.record_name(), RecordType::TXT);
    ASSERT_EQ(answer.values.size(), 1u) << domain;
    EXPECT_EQ(answer.values[0], key.public_record);
  }
}

TEST(Fixtures, WitnessesFromFiles) {
  for (auto id : all_attack_ids()) {
    const auto& w = witness(id);
    auto sc = load_scenario(kFixtures / "scenarios" / (w.scenario + ".scenario"), kFixtures / "profiles");
    EXPECT_TRUE(case_success(run_chain(witness_case(id), sc))) << to_string(id);
  }
}

TEST(Fixtures, ScenarioErrors) {
  auto dir = std::filesystem::temp_directory_path() / "spoofchain_scenario_test";
  std::filesystem::create_directories(dir);
  write_file(dir / "bad.scenario", "receiver = gmail-like\nzone = missing.txt\n");
  EXPECT_THROW(load_scenario(dir / "bad.scenario"), Error);
  write_file(dir / "odd.scenario", "receiver = gmail-like\nzone = " + (kFixtures / "zone.txt").string() +
                                       "\ncolour = blue\n");
  EXPECT_THROW(load_scenario(dir / "odd.scenario"), Error);
  EXPECT_THROW(resolve_scenario("no-such-scenario"), Error);
  std::filesystem::remove_all(dir);
}
