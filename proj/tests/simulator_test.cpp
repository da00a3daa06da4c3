#include <gtest/gtest.h>

#include "spoofchain/error.hpp"
#include "spoofchain/simulator.hpp"
#include "spoofchain/text.hpp"
#include "spoofchain/unicode.hpp"

using namespace spoofchain;

namespace {

RawMessage message(std::string from_value, std::optional<std::string> mail_from, std::string ip,
                   std::optional<std::string> auth = std::nullopt) {
  RawMessage m;
  m.header_block = make_header_block({{"From", std::move(from_value)},
                                      {"To", "<Bob@b.com>"},
                                      {"Subject", "hi"},
                                      {"Date", "Thu, 01 Oct 2026 09:00:00 +0000"}});
  m.body = "hello\r\n";
  m.mail_from = std::move(mail_from);
  m.helo_domain = m.mail_from ? address_domain(*m.mail_from) : "c.com";
  m.rcpt_to = {"Bob@b.com"};
  m.client_ip = std::move(ip);
  m.auth_username = std::move(auth);
  return m;
}

const ChainReport& final_report(const std::vector<ChainReport>& r) { return r.back(); }

}  // namespace

TEST(SendingStage, StrictRejectsAuthMismatch) {
  auto m = message("<Alice@a.com>", "Alice@a.com", "", "Oscar@a.com");
  EXPECT_FALSE(run_sending_stage(m, strict_rfc_profile()).accepted);
  EXPECT_TRUE(run_sending_stage(m, builtin_profile("zimbra-like")).accepted);
}

TEST(SendingStage, MembershipCheckAcceptsListedMailFrom) {
  auto m = message("<Alice@a.com>, <Oscar@a.com>", "Oscar@a.com", "", "Oscar@a.com");
  QuirkProfile p;
  p.from_check = FromCheck::membership;
  EXPECT_TRUE(run_sending_stage(m, p).accepted);
  EXPECT_FALSE(run_sending_stage(m, strict_rfc_profile()).accepted);
}

TEST(SendingStage, DirectBypasses) {
  auto m = message("<Alice@a.com>", "Oscar@attack.com", "203.0.113.66");
  auto out = run_sending_stage(m, strict_rfc_profile());
  EXPECT_TRUE(out.accepted);
  EXPECT_TRUE(out.bypassed);
}

TEST(ReceivingStage, BenignWrongIpRejected) {
  auto m = message("<Alice@a.com>", "Alice@a.com", "203.0.113.66");
  auto out = run_receiving_stage(m, builtin_profile("gmail-like"), *fixture_zone());
  EXPECT_EQ(out.verdict.dmarc.result, DmarcResult::fail);
  EXPECT_EQ(out.disposition, Disposition::reject);
}

TEST(ReceivingStage, VerifyFirstFromPasses) {
  auto m = message("<Oscar@yahoo.com>", "Oscar@yahoo.com", "198.51.100.50");
  m.header_block += "From: <admin@paypal.com>\r\n";
  auto out = run_receiving_stage(m, builtin_profile("icloud-like"), *fixture_zone());
  EXPECT_EQ(out.verdict.dmarc.result, DmarcResult::pass);
  EXPECT_EQ(out.verdict.dmarc.from_domain, "yahoo.com");
}

TEST(ReceivingStage, UndecodedEncodedWordGivesNone) {
  auto m = message(encode_word_b("Alice@a.com"), "Oscar@attack.com", "203.0.113.66");
  auto out = run_receiving_stage(m, builtin_profile("outlook-like"), *fixture_zone());
  EXPECT_EQ(out.verdict.dmarc.result, DmarcResult::none);
  EXPECT_EQ(out.disposition, Disposition::inbox);
}

TEST(ReceivingStage, HeloFallbackControlsA3) {
  auto m = message("<Alice@c.com>", std::nullopt, "203.0.113.66");
  QuirkProfile off;
  off.spf_helo_fallback = false;
  EXPECT_EQ(run_receiving_stage(m, off, *fixture_zone()).verdict.spf.result, SpfResult::none);
  QuirkProfile on;
  on.spf_helo_fallback = true;
  auto v = run_receiving_stage(m, on, *fixture_zone()).verdict.spf;
  EXPECT_EQ(v.result, SpfResult::fail);
  EXPECT_EQ(v.identity_domain, "c.com");
}

TEST(ForwardingStage, AlwaysSignsUnverifiedInbound) {
  auto sc = builtin_scenario("aliyun-forward-gmail");
  auto m = message("<Alice@aliyun.com>", "Oscar@attack.com", "203.0.113.66");
  ForwardSetup fw{"Oscar@aliyun.com", "Oscar@attack.com", true, true};
  auto prior = run_receiving_stage(m, sc.forwarder, *sc.resolver).verdict;
  auto out = run_forwarding_stage(m, sc.forwarder, fw, sc, prior);
  EXPECT_TRUE(out.outcome.dkim_added);
  auto dkim = dkim_verify(out.message, *sc.resolver);
  ASSERT_FALSE(dkim.empty());
  EXPECT_EQ(dkim[0].result, DkimResult::pass);
  EXPECT_EQ(dkim[0].domain, "aliyun.com");
  EXPECT_EQ(out.message.mail_from, "Oscar@aliyun.com");
  EXPECT_EQ(out.message.rcpt_to, std::vector<std::string>{"Oscar@attack.com"});
}

TEST(ForwardingStage, OnlyIfVerifiedSkipsUnsigned) {
  auto sc = builtin_scenario("aliyun-forward-gmail");
  auto m = message("<Alice@aliyun.com>", "Oscar@attack.com", "203.0.113.66");
  ForwardSetup fw{"Oscar@aliyun.com", "Bob@b.com", true, false};
  QuirkProfile p = sc.forwarder;
  p.forward_adds_dkim = ForwardDkim::only_if_verified;
  auto prior = run_receiving_stage(m, p, *sc.resolver).verdict;
  auto out = run_forwarding_stage(m, p, fw, sc, prior);
  EXPECT_FALSE(out.outcome.dkim_added);
  EXPECT_TRUE(dkim_verify(out.message, *sc.resolver).empty());
}

TEST(ForwardingStage, UnverifiedTargetNeedsLenientForwarder) {
  auto sc = builtin_scenario("icloud-forward-gmail");
  auto m = message("<Alice@fwd.com>", "Oscar@attack.com", "203.0.113.66");
  ForwardSetup fw{"Oscar@fwd.com", "Bob@b.com", false, false};
  AuthVerdict prior;
  QuirkProfile p;
  p.forward_requires_auth = true;
  try {
    run_forwarding_stage(m, p, fw, sc, prior);
    FAIL() << "expected no_forward_target";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::no_forward_target);
  }
  p.forward_requires_auth = false;
  EXPECT_TRUE(run_forwarding_stage(m, p, fw, sc, prior).outcome.forwarded);
}

TEST(RenderingStage, A13DropsSecondAt) {
  auto c = generate(AttackId::A13, {"admin@gmail.com", "Oscar@attack.com", "Bob@b.com"});
  auto d = run_rendering_stage(c.messages[0], builtin_profile("netease-like"), {"gmail.com"});
  EXPECT_EQ(d.displayed_address, "admin@gmail.com");
  EXPECT_FALSE(d.extraction_trace.empty());
}

TEST(RenderingStage, A14VisualOrderAndRtlAlert) {
  auto c = generate(AttackId::A14, Bindings{});
  auto d = run_rendering_stage(c.messages[0], builtin_profile("outlook-like"), {"a.com"});
  // the payload's local part is lowercase; addresses compare without case
  EXPECT_EQ(d.displayed_address, "alice@a.com");
  EXPECT_TRUE(text::iequals(d.displayed_address, "Alice@a.com"));
  EXPECT_TRUE(d.alerts.contains(Alert::rtl_override));
  EXPECT_TRUE(spoofchain::unicode::confusable(d.displayed_address, "Alice@a.com"));
}

TEST(RenderingStage, A12HomographAgainstProtected) {
  auto c = generate(AttackId::A12, {"admin@paypal.com", "Oscar@attack.com", "Bob@b.com"});
  auto d = run_rendering_stage(c.messages[0], builtin_profile("icloud-like"), {"paypal.com"});
  EXPECT_TRUE(d.alerts.contains(Alert::homograph));
  auto ascii = builtin_profile("icloud-like");
  ascii.idn_display = IdnDisplay::ascii;
  auto d2 = run_rendering_stage(c.messages[0], ascii, {"paypal.com"});
  EXPECT_EQ(d2.displayed_address, "admin@xn--aypal-uye.com");
  EXPECT_TRUE(d2.alerts.contains(Alert::homograph));
}

TEST(RenderingStage, NoHomographForTheProtectedDomainItself) {
  auto m = message("<admin@paypal.com>", "x@paypal.com", "");
  auto d = run_rendering_stage(m, QuirkProfile{}, {"paypal.com"});
  EXPECT_FALSE(d.alerts.contains(Alert::homograph));
}

TEST(RenderingStage, MultipleFromAlertNeedsDisplayAll) {
  auto c = generate(AttackId::A4, Bindings{});
  QuirkProfile p;
  p.display_from = DisplayFrom::all;
  EXPECT_TRUE(run_rendering_stage(c.messages[0], p, {}).alerts.contains(Alert::multiple_from));
  p.display_from = DisplayFrom::last;
  EXPECT_FALSE(run_rendering_stage(c.messages[0], p, {}).alerts.contains(Alert::multiple_from));
}

TEST(RenderingStage, SicUsesContext) {
  auto m = message("<Alice@a.com>", "Oscar@attack.com", "");
  QuirkProfile p;
  p.sic_enabled = true;
  RenderContext ctx{"attack.com", "a.com", false, false};
  EXPECT_TRUE(run_rendering_stage(m, p, {}, ctx).alerts.contains(Alert::sic));
  ctx.aligned_dkim_pass = true;
  EXPECT_FALSE(run_rendering_stage(m, p, {}, ctx).alerts.contains(Alert::sic));
}

TEST(RenderingStage, DoesNotMutate) {
  auto c = generate(AttackId::A14, Bindings{});
  auto before = c.messages[0];
  run_rendering_stage(c.messages[0], strict_rfc_profile(), {"a.com"});
  EXPECT_EQ(c.messages[0], before);
}

TEST(Chain, Case1) {
  auto r = run_chain(shared_mta_case(), builtin_scenario("yahoo-to-icloud"));
  const auto& f = final_report(r);
  ASSERT_TRUE(f.receiving && f.rendering);
  EXPECT_TRUE(f.sending.accepted);
  EXPECT_EQ(f.receiving->verdict.dmarc.result, DmarcResult::pass);
  EXPECT_EQ(f.receiving->verdict.dmarc.from_domain, "yahoo.com");
  EXPECT_EQ(f.rendering->displayed_address, "admin@paypal.com");
  EXPECT_TRUE(f.rendering->alerts.empty());
  EXPECT_TRUE(f.success);
}

TEST(Chain, Case2) {
  auto r = run_chain(forwarding_case(), builtin_scenario("aliyun-forward-gmail"));
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].hop, "forwarder");
  ASSERT_TRUE(r[0].forwarding);
  EXPECT_TRUE(r[0].forwarding->dkim_added);
  const auto& f = final_report(r);
  ASSERT_TRUE(f.receiving);
  const auto& v = f.receiving->verdict;
  EXPECT_EQ(v.spf.identity_domain, "attack.com");
  ASSERT_FALSE(v.dkim.empty());
  EXPECT_EQ(v.dkim[0].domain, "aliyun.com");
  EXPECT_EQ(v.dmarc.from_domain, "aliyun.com");
  EXPECT_EQ(v.dmarc.result, DmarcResult::pass);
  EXPECT_EQ(f.receiving->disposition, Disposition::inbox);
  EXPECT_TRUE(f.success);
}

TEST(Chain, Case1And2FailUnderStrict) {
  EXPECT_FALSE(case_success(run_chain(shared_mta_case(), builtin_scenario("strict-rfc"))));
  EXPECT_FALSE(case_success(run_chain(forwarding_case(), builtin_scenario("strict-rfc"))));
}

TEST(Chain, A11TrustsFalsifiedArc) {
  auto r = run_chain(witness_case(AttackId::A11), builtin_scenario("office365-forward-zoho"));
  const auto& f = final_report(r);
  ASSERT_TRUE(f.receiving);
  EXPECT_EQ(f.receiving->verdict.dmarc.result, DmarcResult::fail);
  EXPECT_TRUE(f.receiving->arc_override);
  EXPECT_EQ(f.receiving->effective_dmarc, DmarcResult::pass);
  EXPECT_TRUE(f.success);
}

TEST(Chain, A9StopsAtVerifyingForwarder) {
  auto sc = builtin_scenario("icloud-forward-gmail");
  sc.forwarder.forward_requires_auth = true;
  auto r = run_chain(witness_case(AttackId::A9), sc);
  EXPECT_FALSE(case_success(r));
  EXPECT_EQ(final_report(r).stopped_at, Stage::forwarding);
}

TEST(Chain, MissingResolverIsIncomplete) {
  auto sc = builtin_scenario("icloud");
  sc.resolver.reset();
  try {
    run_chain(witness_case(AttackId::A4), sc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::scenario_incomplete);
  }
}

// Every witness hits its expected outcome under its scenario and fails
// under strict-rfc.
class Witnesses : public ::testing::TestWithParam<AttackId> {};

TEST_P(Witnesses, VulnerableScenario) {
  auto id = GetParam();
  const auto& w = witness(id);
  auto r = run_chain(witness_case(id), builtin_scenario(w.scenario));
  const auto& f = final_report(r);
  ASSERT_TRUE(f.receiving) << f.stop_reason;
  ASSERT_TRUE(f.rendering);
  if (w.expected.sending_accept) EXPECT_EQ(f.sending.accepted, *w.expected.sending_accept);
  if (w.expected.spf) EXPECT_EQ(f.receiving->verdict.spf.result, *w.expected.spf);
  if (w.expected.dkim) {
    auto best = f.receiving->verdict.dkim.empty() ? DkimResult::none : f.receiving->verdict.dkim.front().result;
    EXPECT_EQ(best, *w.expected.dkim);
  }
  if (w.expected.dmarc) EXPECT_EQ(f.receiving->effective_dmarc, *w.expected.dmarc);
  if (w.expected.displayed_address) EXPECT_EQ(f.rendering->displayed_address, *w.expected.displayed_address);
  if (w.expected.sic_alert) EXPECT_EQ(f.rendering->alerts.contains(Alert::sic), *w.expected.sic_alert);
  EXPECT_TRUE(f.success);
}

TEST_P(Witnesses, StrictRfc) {
  auto r = run_chain(witness_case(GetParam()), builtin_scenario("strict-rfc"));
  EXPECT_FALSE(case_success(r));
}

INSTANTIATE_TEST_SUITE_P(AllIds, Witnesses, ::testing::ValuesIn(all_attack_ids()),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Chain, EveryVariantFailsUnderStrict) {
  auto sc = builtin_scenario("strict-rfc");
  for (auto id : all_attack_ids()) {
    for (int v = 0; v < variant_count(id); ++v) {
      auto w = witness(id);
      w.knobs.variant = v;
      auto c = generate(id, w.bindings, w.knobs);
      EXPECT_FALSE(case_success(run_chain(c, sc))) << c.name();
    }
  }
}
