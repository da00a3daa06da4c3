#include <gtest/gtest.h>

#include "../src/fixture_keys.hpp"
#include "spoofchain/auth.hpp"
#include "spoofchain/error.hpp"
#include "spoofchain/text.hpp"

using namespace spoofchain;

namespace {

DnsZone base_zone() {
  return DnsZone::parse(R"(
a.com TXT "v=spf1 ip4:198.51.100.10/32 -all"
_dmarc.a.com TXT "v=DMARC1; p=reject"
mail.a.com A 198.51.100.11
c.com TXT "v=spf1 -all"
inc.com TXT "v=spf1 include:a.com ~all"
mx.com TXT "v=spf1 mx -all"
mx.com MX 10 mx1.mx.com
mx1.mx.com A 192.0.2.7
red.com TXT "v=spf1 redirect=a.com"
two.com TXT "v=spf1 -all"
two.com TXT "v=spf1 +all"
macro.com TXT "v=spf1 exists:%{i}.x.com -all"
v6.com TXT "v=spf1 ip6:2001:db8::/32 -all"
google.com TXT "v=spf1 -all"
_dmarc.google.com TXT "v=DMARC1; p=reject; sp=none"
broken.com SERVFAIL
)");
}

RawMessage sample() {
  RawMessage m;
  m.helo_domain = "mail.a.com";
  m.mail_from = "alice@a.com";
  m.rcpt_to = {"bob@b.com"};
  m.client_ip = "198.51.100.10";
  m.header_block = make_header_block({{"From", "Alice <alice@a.com>"},
                                      {"To", "bob@b.com"},
                                      {"Subject", "Quarterly   numbers"},
                                      {"Message-ID", "<1@a.com>"}});
  m.body = "Hello Bob,\r\n\r\nnumbers attached.  \r\n\r\n";
  return m;
}

DkimKeyPair key_a() { return DkimKeyPair::from_pem(fixtures::fixture_key_pem("a.com"), "s1", "a.com"); }

}  // namespace

TEST(Spf, DirectMatch) {
  auto z = base_zone();
  auto v = spf_evaluate("198.51.100.10", "mail.a.com", std::string("x@a.com"), z, QuirkProfile{});
  EXPECT_EQ(v.result, SpfResult::pass);
  EXPECT_EQ(v.identity_domain, "a.com");
  EXPECT_EQ(v.identity_source, IdentitySource::mail_from);
}

TEST(Spf, EmptyMailFromWithoutFallbackIsNone) {
  auto z = base_zone();
  QuirkProfile p;
  p.spf_helo_fallback = false;
  auto v = spf_evaluate("203.0.113.66", "c.com", std::nullopt, z, p);
  EXPECT_EQ(v.result, SpfResult::none);
  EXPECT_EQ(v.identity_source, IdentitySource::helo);
  p.spf_helo_fallback = true;
  auto f = spf_evaluate("203.0.113.66", "c.com", std::nullopt, z, p);
  EXPECT_EQ(f.result, SpfResult::fail);
  EXPECT_EQ(f.identity_domain, "c.com");
}

TEST(Spf, SubdomainWithoutRecordIsNone) {
  auto z = base_zone();
  auto v = spf_evaluate("203.0.113.66", "x", std::string("x@mail.a.com"), z, QuirkProfile{});
  EXPECT_EQ(v.result, SpfResult::none);
  EXPECT_EQ(v.identity_domain, "mail.a.com");
}

TEST(Spf, Mechanisms) {
  auto z = base_zone();
  EXPECT_EQ(spf_check_host("198.51.100.10", "inc.com", z), SpfResult::pass);
  EXPECT_EQ(spf_check_host("203.0.113.1", "inc.com", z), SpfResult::softfail);
  EXPECT_EQ(spf_check_host("192.0.2.7", "mx.com", z), SpfResult::pass);
  EXPECT_EQ(spf_check_host("192.0.2.8", "mx.com", z), SpfResult::fail);
  EXPECT_EQ(spf_check_host("198.51.100.10", "red.com", z), SpfResult::pass);
  EXPECT_EQ(spf_check_host("2001:db8::1", "v6.com", z), SpfResult::pass);
  EXPECT_EQ(spf_check_host("2001:db9::1", "v6.com", z), SpfResult::fail);
}

TEST(Spf, Errors) {
  auto z = base_zone();
  EXPECT_EQ(spf_check_host("1.2.3.4", "two.com", z), SpfResult::permerror);
  EXPECT_EQ(spf_check_host("1.2.3.4", "macro.com", z), SpfResult::permerror);
  EXPECT_EQ(spf_check_host("1.2.3.4", "broken.com", z), SpfResult::temperror);
}

TEST(Spf, LookupLimit) {
  DnsZone z;
  for (int i = 0; i < 12; ++i) {
    z.add("l" + std::to_string(i) + ".com", RecordType::TXT,
          "v=spf1 include:l" + std::to_string(i + 1) + ".com -all");
  }
  z.add("l12.com", RecordType::TXT, "v=spf1 +all");
  EXPECT_EQ(spf_check_host("1.2.3.4", "l0.com", z), SpfResult::permerror);
  EXPECT_EQ(spf_check_host("1.2.3.4", "l3.com", z), SpfResult::pass);
}

TEST(DkimCanon, RelaxedBodyHandRules) {
  // trailing empty lines and trailing whitespace go away
  EXPECT_EQ(canonicalize_body("Hi \r\n\r\n\r\n", Canon::relaxed), "Hi\r\n");
  EXPECT_EQ(canonicalize_body("Hi\r\n", Canon::relaxed), "Hi\r\n");
  // inner and leading runs collapse to one space
  EXPECT_EQ(canonicalize_body("  a  \t b\r\n", Canon::relaxed), " a b\r\n");
  // empty body stays empty
  EXPECT_EQ(canonicalize_body("", Canon::relaxed), "");
  // whitespace-only inner line becomes empty but stays
  EXPECT_EQ(canonicalize_body("line1\r\n \r\nline3\r\n", Canon::relaxed), "line1\r\n\r\nline3\r\n");
  // whitespace-only trailing lines vanish
  EXPECT_EQ(canonicalize_body("a\r\n\t\r\n \r\n", Canon::relaxed), "a\r\n");
}

TEST(DkimCanon, SimpleBody) {
  EXPECT_EQ(canonicalize_body("", Canon::simple), "\r\n");
  EXPECT_EQ(canonicalize_body("Hi \r\n\r\n", Canon::simple), "Hi \r\n");
}

TEST(DkimCanon, Headers) {
  EXPECT_EQ(canonicalize_header("SubJect ", " A  \r\n\t B ", Canon::relaxed), "subject:A B\r\n");
  EXPECT_EQ(canonicalize_header("SubJect ", " A  \r\n\t B ", Canon::simple), "SubJect : A  \r\n\t B \r\n");
}

TEST(Dkim, RoundTripAllModes) {
  auto key = key_a();
  for (auto h : {Canon::simple, Canon::relaxed}) {
    for (auto b : {Canon::simple, Canon::relaxed}) {
      auto z = base_zone();
      z.add(key.record_name(), RecordType::TXT, key.public_record);
      auto signed_msg = dkim_sign(sample(), key, {h, b});
      auto res = dkim_verify(signed_msg, z);
      ASSERT_EQ(res.size(), 1u);
      EXPECT_EQ(res[0].result, DkimResult::pass) << res[0].detail;
      EXPECT_EQ(res[0].domain, "a.com");
      EXPECT_EQ(res[0].selector, "s1");
      auto tampered = signed_msg;
      tampered.body += "x";
      EXPECT_EQ(dkim_verify(tampered, z)[0].result, DkimResult::fail);
    }
  }
}

TEST(Dkim, Ed25519) {
  auto key = DkimKeyPair::from_pem(fixtures::fixture_key_pem("ed.a.com"), "ed", "a.com");
  EXPECT_EQ(key.algorithm, DkimAlgorithm::ed25519_sha256);
  DnsZone z;
  z.add(key.record_name(), RecordType::TXT, key.public_record);
  auto signed_msg = dkim_sign(sample(), key, {});
  EXPECT_EQ(dkim_verify(signed_msg, z)[0].result, DkimResult::pass);
}

TEST(Dkim, EquivalentBodiesShareHash) {
  auto key = key_a();
  auto m1 = sample();
  m1.body = "Hi \r\n\r\n\r\n";
  auto m2 = sample();
  m2.body = "Hi\r\n";
  auto bh = [&](const RawMessage& m) {
    auto s = dkim_sign(m, key, {Canon::relaxed, Canon::relaxed}).header_block;
    auto p = s.find("bh=");
    return s.substr(p, s.find(';', p) - p);
  };
  EXPECT_EQ(bh(m1), bh(m2));
}

TEST(Dkim, UnsignedIsEmptyAndHeaderTamperFails) {
  auto z = base_zone();
  EXPECT_TRUE(dkim_verify(sample(), z).empty());
  auto key = key_a();
  z.add(key.record_name(), RecordType::TXT, key.public_record);
  auto m = dkim_sign(sample(), key, {Canon::relaxed, Canon::relaxed});
  auto pos = m.header_block.find("Quarterly");
  m.header_block.replace(pos, 9, "Quarterlx");
  EXPECT_EQ(dkim_verify(m, z)[0].result, DkimResult::fail);
}

TEST(Dkim, MissingKeyOrFromField) {
  auto key = key_a();
  auto m = dkim_sign(sample(), key, {});
  auto r = dkim_verify(m, DnsZone{});
  EXPECT_EQ(r[0].result, DkimResult::fail);
  RawMessage no_from = sample();
  no_from.header_block = make_header_block({{"To", "b@b.com"}});
  try {
    dkim_sign(no_from, key, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::missing_from_header);
  }
}

TEST(Dkim, LengthTagRejected) {
  auto key = key_a();
  DnsZone z;
  z.add(key.record_name(), RecordType::TXT, key.public_record);
  auto m = dkim_sign(sample(), key, {});
  auto pos = m.header_block.find("v=1;");
  m.header_block.insert(pos + 4, " l=5;");
  auto r = dkim_verify(m, z);
  EXPECT_EQ(r[0].result, DkimResult::fail);
  EXPECT_NE(r[0].detail.find("permerror"), std::string::npos);
}

TEST(OrgDomain, Examples) {
  auto s = SuffixSet::builtin();
  EXPECT_EQ(org_domain("mail.google.com", s), "google.com");
  EXPECT_EQ(org_domain("a.b.co.uk", s), "b.co.uk");
  try {
    org_domain("com", s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::domain_is_suffix);
  }
}

TEST(Dmarc, PassViaSpf) {
  auto z = base_zone();
  SpfVerdict spf{SpfResult::pass, "a.com", IdentitySource::mail_from, {}};
  auto v = dmarc_evaluate("a.com", spf, {}, z, QuirkProfile{});
  EXPECT_EQ(v.result, DmarcResult::pass);
  EXPECT_EQ(v.aligned_via, AlignedVia::spf);
  EXPECT_EQ(v.policy_applied, DmarcPolicy::none);
}

TEST(Dmarc, RelaxedDkimAlignment) {
  auto z = base_zone();
  SpfVerdict spf{SpfResult::none, "", IdentitySource::mail_from, {}};
  auto v = dmarc_evaluate("mail.a.com", spf, {{"a.com", "s1", DkimResult::pass, {}}}, z, QuirkProfile{});
  EXPECT_EQ(v.result, DmarcResult::pass);
  EXPECT_EQ(v.aligned_via, AlignedVia::dkim);
  EXPECT_EQ(v.record_domain, "a.com");
}

TEST(Dmarc, SubdomainUsesOrgRecordAndSp) {
  auto z = base_zone();
  SpfVerdict spf{SpfResult::fail, "attack.com", IdentitySource::mail_from, {}};
  auto v = dmarc_evaluate("sub.google.com", spf, {}, z, QuirkProfile{});
  EXPECT_EQ(v.result, DmarcResult::fail);
  EXPECT_EQ(v.record_domain, "google.com");
  EXPECT_EQ(v.policy_applied, DmarcPolicy::none);
  QuirkProfile no_fallback;
  no_fallback.dmarc_org_fallback = false;
  EXPECT_EQ(dmarc_evaluate("sub.google.com", spf, {}, z, no_fallback).result, DmarcResult::none);
}

TEST(Dmarc, FailAppliesPolicyAndStrictAlignment) {
  auto z = base_zone();
  z.add("_dmarc.s.com", RecordType::TXT, "v=DMARC1; p=quarantine; aspf=s");
  SpfVerdict spf{SpfResult::pass, "mail.s.com", IdentitySource::mail_from, {}};
  auto v = dmarc_evaluate("s.com", spf, {}, z, QuirkProfile{});
  EXPECT_EQ(v.result, DmarcResult::fail);
  EXPECT_EQ(v.policy_applied, DmarcPolicy::quarantine);
  SpfVerdict wrong{SpfResult::pass, "attack.com", IdentitySource::mail_from, {}};
  EXPECT_EQ(dmarc_evaluate("a.com", wrong, {}, z, QuirkProfile{}).policy_applied, DmarcPolicy::reject);
}

TEST(Dmarc, NoRecordAndTemperror) {
  auto z = base_zone();
  SpfVerdict spf{};
  EXPECT_EQ(dmarc_evaluate("c.com", spf, {}, z, QuirkProfile{}).result, DmarcResult::none);
  z.add_failure("_dmarc.x.com");
  EXPECT_EQ(dmarc_evaluate("x.com", spf, {}, z, QuirkProfile{}).result, DmarcResult::temperror);
}

TEST(Arc, SealValidateTamperAndFalsifiedVerdict) {
  auto key = DkimKeyPair::from_pem(fixtures::fixture_key_pem("fwd.com"), "arc", "fwd.com");
  DnsZone z;
  z.add(key.record_name(), RecordType::TXT, key.public_record);
  AuthVerdict prior;
  prior.spf = {SpfResult::none, "soft.com", IdentitySource::mail_from, {}};
  prior.dmarc.result = DmarcResult::pass;  // actual evaluation was none
  prior.dmarc.from_domain = "soft.com";
  auto sealed = arc_seal(sample(), key, 1, prior, "mx.fwd.com");
  auto v = arc_validate(sealed, z);
  EXPECT_TRUE(v.chain_valid) << v.detail;
  EXPECT_EQ(v.instance_count, 1);
  EXPECT_EQ(v.claimed_dmarc, "pass");
  EXPECT_NE(sealed.header_block.find("dmarc=pass header.from=soft.com"), std::string::npos);

  auto second = arc_seal(sealed, key, 2, prior, "mx2.fwd.com");
  auto v2 = arc_validate(second, z);
  EXPECT_TRUE(v2.chain_valid) << v2.detail;
  EXPECT_EQ(v2.instance_count, 2);

  auto tampered = sealed;
  auto pos = tampered.header_block.find("Quarterly");
  tampered.header_block.replace(pos, 9, "Quarterlx");
  EXPECT_FALSE(arc_validate(tampered, z).chain_valid);

  try {
    arc_seal(sealed, key, 3, prior, "x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::instance_gap);
  }
  EXPECT_FALSE(arc_validate(sample(), z).chain_valid);
}

TEST(Zone, ParseAndRoundTrip) {
  auto z = base_zone();
  auto back = DnsZone::parse(z.to_text());
  EXPECT_EQ(back.to_text(), z.to_text());
  auto a = z.query("A.COM.", RecordType::TXT);
  ASSERT_EQ(a.values.size(), 1u);
  EXPECT_EQ(z.query("nothing.com", RecordType::TXT).status, DnsStatus::nxdomain);
  EXPECT_EQ(z.query("mail.a.com", RecordType::TXT).status, DnsStatus::ok);
  auto seg = DnsZone::parse("x.com TXT \"v=spf1 \" \"-all\"\n");
  EXPECT_EQ(seg.query("x.com", RecordType::TXT).values.at(0), "v=spf1 -all");
}
