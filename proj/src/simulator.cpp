#include "spoofchain/simulator.hpp"

#include <algorithm>

#include "spoofchain/error.hpp"
#include "spoofchain/text.hpp"
#include "spoofchain/unicode.hpp"

namespace spoofchain {

std::string_view to_string(Disposition d) {
  switch (d) {
    case Disposition::inbox: return "inbox";
    case Disposition::spam: return "spam";
    case Disposition::reject: return "reject";
  }
  return "?";
}

bool success_rule(const SuccessInputs& in) {
  return in.delivered && !in.displayed_address.empty() &&
         unicode::skeleton(in.displayed_address) == unicode::skeleton(in.spoof_identity) &&
         (in.dmarc == DmarcResult::pass || in.dmarc == DmarcResult::none) && in.disposition == Disposition::inbox &&
         in.shown_alerts.empty();
}

// ---- sending

SendingOutcome run_sending_stage(const RawMessage& msg, const QuirkProfile& profile) {
  if (!msg.auth_username) return {true, true, "no authenticated submission"};
  const auto& auth = *msg.auth_username;
  if (profile.check_auth_matches_mail_from && (!msg.mail_from || !text::iequals(auth, *msg.mail_from))) {
    return {false, false, "auth username " + auth + " does not match MAIL FROM"};
  }
  if (profile.from_check == FromCheck::none) return {true, false, "From not checked"};

  // Checks that only look at one mailbox do not care how many there are.
  QuirkProfile view = profile;
  if (profile.from_check != FromCheck::exact && !profile.strict()) view.multiple_from = MultipleFrom::use_first;
  auto id = extract_from_identity(msg, view, IdentityPurpose::auth);
  if (id.rejected) return {false, false, "From rejected: " + id.reason};
  if (id.mailboxes.empty()) return {false, false, "no usable From mailbox"};

  const std::string mail_from = msg.mail_from.value_or("");
  auto same = [&](const Mailbox& m) { return text::iequals(m.address(), mail_from); };
  bool ok = false;
  switch (profile.from_check) {
    case FromCheck::first_from: ok = same(id.mailboxes.front()); break;
    case FromCheck::membership: ok = std::any_of(id.mailboxes.begin(), id.mailboxes.end(), same); break;
    case FromCheck::exact:
      ok = id.mailboxes.size() == 1 && id.from_fields == 1 && same(id.mailboxes.front());
      break;
    case FromCheck::none: ok = true; break;
  }
  if (!ok) return {false, false, "From does not match MAIL FROM " + mail_from};
  return {true, false, "From matches MAIL FROM (" + std::string(to_string(profile.from_check)) + ")"};
}

// ---- receiving

ReceivingOutcome run_receiving_stage(const RawMessage& msg, const QuirkProfile& profile, const Resolver& resolver,
                                     const SuffixSet& suffixes) {
  ReceivingOutcome out;
  auto& v = out.verdict;
  v.spf = spf_evaluate(msg.client_ip, msg.helo_domain, msg.mail_from, resolver, profile);
  v.dkim = dkim_verify(msg, resolver);
  if (arc_highest_instance(msg) > 0) v.arc = arc_validate(msg, resolver);

  auto id = extract_from_identity(msg, profile, IdentityPurpose::auth);
  if (id.rejected) {
    v.dmarc.detail = "From rejected: " + id.reason;
    out.effective_dmarc = DmarcResult::none;
    out.disposition = Disposition::reject;
    out.reason = v.dmarc.detail;
    return out;
  }
  v.dmarc = dmarc_evaluate(id.domain(), v.spf, v.dkim, resolver, profile, suffixes);
  out.effective_dmarc = v.dmarc.result;
  if (v.dmarc.result == DmarcResult::fail && profile.trust_arc_pass && v.arc && v.arc->chain_valid &&
      v.arc->claimed_dmarc == "pass") {
    out.effective_dmarc = DmarcResult::pass;
    out.arc_override = true;
  }

  if (out.effective_dmarc == DmarcResult::fail && v.dmarc.policy_applied == DmarcPolicy::reject) {
    out.disposition = Disposition::reject;
    out.reason = "dmarc fail, p=reject";
  } else if (out.effective_dmarc == DmarcResult::fail && v.dmarc.policy_applied == DmarcPolicy::quarantine) {
    out.disposition = Disposition::spam;
    out.reason = "dmarc fail, p=quarantine";
  } else if (v.spf.result == SpfResult::fail && profile.reject_on_spf_fail &&
             out.effective_dmarc != DmarcResult::pass) {
    out.disposition = Disposition::reject;
    out.reason = "spf fail";
  } else {
    out.disposition = Disposition::inbox;
    out.reason = out.arc_override ? "dmarc pass via trusted ARC" : "accepted";
  }
  return out;
}

// ---- forwarding

ForwardResult run_forwarding_stage(const RawMessage& msg, const QuirkProfile& profile, const ForwardSetup& setup,
                                   const Scenario& scenario, const AuthVerdict& prior) {
  if (profile.forward_requires_auth && !setup.target_verified) {
    throw Error(ErrorCode::no_forward_target, "forward target " + setup.target + " was never verified");
  }
  const auto domain = text::to_lower(address_domain(setup.account));
  ForwardResult out;
  out.message = msg;
  auto& m = out.message;
  m.mail_from = setup.account;
  m.rcpt_to = {setup.target};
  m.helo_domain = domain;
  m.auth_username.reset();
  if (auto ip = scenario.mta_ips.find(domain); ip != scenario.mta_ips.end()) {
    m.client_ip = ip->second;
  } else {
    throw Error(ErrorCode::scenario_incomplete, "no MTA address for forwarder " + domain);
  }
  out.outcome.forwarded = true;

  auto key = [&]() -> const DkimKeyPair& {
    auto it = scenario.keys.find(domain);
    if (it == scenario.keys.end()) throw Error(ErrorCode::scenario_incomplete, "no signing key for " + domain);
    return it->second;
  };
  bool sign = profile.forward_adds_dkim == ForwardDkim::always;
  if (profile.forward_adds_dkim == ForwardDkim::only_if_verified) {
    sign = std::any_of(prior.dkim.begin(), prior.dkim.end(),
                       [](const DkimEntry& e) { return e.result == DkimResult::pass; });
  }
  if (sign) {
    m = dkim_sign(m, key(), Canonicalization{});
    out.outcome.dkim_added = true;
  }
  if (profile.arc_seal_on_forward) {
    AuthVerdict claimed = prior;
    if (profile.arc_falsify_dmarc) claimed.dmarc.result = DmarcResult::pass;
    m = arc_seal(m, key(), arc_highest_instance(m) + 1, claimed, scenario.authserv_id);
    out.outcome.arc_added = true;
  }
  out.outcome.reason = "forwarded to " + setup.target;
  return out;
}

// ---- rendering

namespace {

std::string domain_part(std::string_view s) {
  auto at = s.rfind('@');
  return at == std::string_view::npos ? std::string{} : std::string(s.substr(at + 1));
}

bool has_invisible(std::string_view s, const QuirkProfile& profile) {
  for (const auto& u : text::decode_utf8(s)) {
    if (u.raw) {
      if (QuirkProfile::is_invisible_raw(static_cast<unsigned char>(u.cp))) return true;
      continue;
    }
    if (profile.is_invisible(u.cp)) return true;
    if ((u.cp >= 0x200B && u.cp <= 0x200F) || u.cp == 0x2060 || u.cp == 0xFEFF) return true;
  }
  return false;
}

std::string drop_after_first_at(std::string_view s, const std::set<char32_t>& drop) {
  auto at = s.find('@');
  if (at == std::string_view::npos || drop.empty()) return std::string(s);
  std::string out(s.substr(0, at + 1));
  auto rest = s.substr(at + 1);
  for (const auto& u : text::decode_utf8(rest)) {
    if (!u.raw && drop.contains(u.cp)) continue;
    out.append(rest.substr(u.offset, u.length));
  }
  return out;
}

std::string idn_display(std::string_view s) {
  auto at = s.rfind('@');
  if (at == std::string_view::npos) return std::string(s);
  auto domain = s.substr(at + 1);
  if (text::to_lower(domain).find("xn--") == std::string::npos) return std::string(s);
  return std::string(s.substr(0, at + 1)) + unicode::idn_to_unicode(domain);
}

std::string strip_bidi(std::string_view s) {
  std::string out;
  for (const auto& u : text::decode_utf8(s)) {
    if (!u.raw && unicode::is_bidi_control(u.cp)) continue;
    out.append(s.substr(u.offset, u.length));
  }
  return out;
}

bool homograph(std::string_view displayed, const std::vector<std::string>& protected_domains) {
  auto domain = text::to_lower(unicode::idn_to_unicode(domain_part(displayed)));
  if (domain.empty()) return false;
  for (const auto& label : text::split(domain, '.')) {
    if (unicode::mixed_script(label)) return true;
  }
  auto sk = unicode::skeleton(domain);
  for (const auto& p : protected_domains) {
    auto pd = text::to_lower(p);
    if (pd != domain && unicode::skeleton(pd) == sk) return true;
  }
  return false;
}

}  // namespace

RenderDecision run_rendering_stage(const RawMessage& msg, const QuirkProfile& profile,
                                   const std::vector<std::string>& protected_domains,
                                   const RenderContext& context) {
  RenderDecision d;
  auto id = extract_from_identity(msg, profile, IdentityPurpose::display);
  for (const auto& [step, value] : id.trace) d.extraction_trace.push_back({step, "", value});
  if (id.rejected || !id.selected) {
    d.extraction_trace.push_back({"display", "", id.rejected ? "rejected: " + id.reason : "no mailbox"});
    return d;
  }

  std::string logical;
  if (profile.display_from == DisplayFrom::all) {
    for (const auto& m : id.mailboxes) {
      if (!logical.empty()) logical += ", ";
      logical += m.raw_address;
    }
  } else {
    logical = id.selected->raw_address;
  }
  d.displayed_name = id.selected->display_name;

  auto step = [&](std::string name, std::string next) {
    if (next != logical) d.extraction_trace.push_back({std::move(name), logical, next});
    logical = std::move(next);
  };
  step("drop-chars", drop_after_first_at(logical, profile.display_drop_chars));
  if (profile.idn_display == IdnDisplay::unicode) step("idn", idn_display(logical));

  if (unicode::has_bidi_controls(logical)) d.alerts.insert(Alert::rtl_override);
  if (has_invisible(logical, profile)) d.alerts.insert(Alert::invisible_chars);

  std::string shown = profile.render_bidi ? unicode::bidi_visual(logical) : strip_bidi(logical);
  if (shown != logical) d.extraction_trace.push_back({"bidi", logical, shown});
  d.displayed_address = shown;

  if (homograph(shown, protected_domains)) d.alerts.insert(Alert::homograph);
  if (id.from_fields >= 2 && profile.display_from == DisplayFrom::all) d.alerts.insert(Alert::multiple_from);
  if (profile.sic_enabled && !context.envelope_domain.empty() && !context.aligned_dkim_pass &&
      !context.dmarc_pass) {
    bool differ = true;
    if (!context.auth_from_domain.empty()) {
      try {
        differ = org_domain(context.envelope_domain, SuffixSet::builtin()) !=
                 org_domain(context.auth_from_domain, SuffixSet::builtin());
      } catch (const Error&) {
        differ = !text::iequals(context.envelope_domain, context.auth_from_domain);
      }
    }
    if (differ) d.alerts.insert(Alert::sic);
  }
  for (auto a : d.alerts) {
    if (profile.shown_alerts.contains(a)) d.shown_alerts.insert(a);
  }
  return d;
}

RenderContext render_context(const RawMessage& msg, const ReceivingOutcome& receiving, const SuffixSet& suffixes) {
  RenderContext ctx;
  ctx.envelope_domain = msg.mail_from && !msg.mail_from->empty() ? address_domain(*msg.mail_from) : msg.helo_domain;
  ctx.envelope_domain = text::to_lower(ctx.envelope_domain);
  const auto& dmarc = receiving.verdict.dmarc;
  ctx.auth_from_domain = dmarc.from_domain;
  ctx.dmarc_pass = receiving.effective_dmarc == DmarcResult::pass;
  if (!dmarc.from_domain.empty()) {
    for (const auto& e : receiving.verdict.dkim) {
      if (e.result != DkimResult::pass) continue;
      try {
        if (org_domain(e.domain, suffixes) == org_domain(dmarc.from_domain, suffixes)) ctx.aligned_dkim_pass = true;
      } catch (const Error&) {
      }
    }
  }
  return ctx;
}

// ---- chain

namespace {

void finish(ChainReport& r) {
  SuccessInputs in;
  in.spoof_identity = r.spoof_identity;
  if (r.receiving) {
    in.dmarc = r.receiving->effective_dmarc;
    in.disposition = r.receiving->disposition;
    in.delivered = !r.stopped_at && r.receiving->disposition != Disposition::reject;
  }
  if (r.rendering) {
    in.displayed_address = r.rendering->displayed_address;
    in.shown_alerts = r.rendering->shown_alerts;
  } else {
    in.delivered = false;
  }
  r.success = success_rule(in);
}

}  // namespace

std::vector<ChainReport> run_chain(const AttackCase& c, const Scenario& scenario) {
  if (!scenario.resolver) throw Error(ErrorCode::scenario_incomplete, "scenario " + scenario.name + " has no zone");
  if (c.messages.empty()) throw Error(ErrorCode::scenario_incomplete, "case " + c.name() + " has no messages");

  std::vector<ChainReport> reports;
  ChainReport base;
  base.case_id = c.name();
  base.ids = c.ids;
  base.scenario = scenario.name;
  base.spoof_identity = c.spoof_identity;
  base.sic_enabled = scenario.render_profile().sic_enabled;

  RawMessage msg = c.messages.front();
  if (msg.auth_username && msg.client_ip.empty()) {
    auto domain = text::to_lower(address_domain(*msg.auth_username));
    auto it = scenario.mta_ips.find(domain);
    if (it == scenario.mta_ips.end()) {
      throw Error(ErrorCode::scenario_incomplete, "no MTA address for provider " + domain);
    }
    msg.client_ip = it->second;
  }

  ChainReport final = base;
  final.hop = "final";
  final.profile_name = scenario.receiver.name;
  final.sending = run_sending_stage(msg, scenario.sender);
  if (!final.sending.accepted) {
    final.stopped_at = Stage::sending;
    final.stop_reason = final.sending.reason;
    finish(final);
    reports.push_back(final);
    return reports;
  }

  if (c.forward) {
    ChainReport hop = base;
    hop.hop = "forwarder";
    hop.profile_name = scenario.forwarder.name;
    hop.sending = final.sending;
    hop.receiving = run_receiving_stage(msg, scenario.forwarder, *scenario.resolver, scenario.suffixes);
    auto stop = [&](Stage stage, std::string reason) {
      final.stopped_at = stage;
      final.stop_reason = std::move(reason);
      finish(hop);
      finish(final);
      reports.push_back(hop);
      reports.push_back(final);
      return reports;
    };
    if (hop.receiving->disposition != Disposition::inbox) {
      return stop(Stage::receiving, "forwarder filed the message as " +
                                        std::string(to_string(hop.receiving->disposition)));
    }
    try {
      auto fwd = run_forwarding_stage(msg, scenario.forwarder, *c.forward, scenario, hop.receiving->verdict);
      hop.forwarding = fwd.outcome;
      msg = std::move(fwd.message);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::no_forward_target) throw;
      hop.forwarding = ForwardingOutcome{false, false, false, e.what()};
      return stop(Stage::forwarding, e.what());
    }
    finish(hop);
    reports.push_back(hop);
    if (c.forward->resend) {
      if (c.messages.size() < 2) {
        throw Error(ErrorCode::scenario_incomplete, "case " + c.name() + " resends without a second envelope");
      }
      const auto& env = c.messages[1];
      msg.mail_from = env.mail_from;
      msg.helo_domain = env.helo_domain;
      msg.rcpt_to = env.rcpt_to;
      msg.client_ip = env.client_ip;
      msg.auth_username = env.auth_username;
    }
  }

  final.receiving = run_receiving_stage(msg, scenario.receiver, *scenario.resolver, scenario.suffixes);
  if (final.receiving->disposition == Disposition::reject) {
    final.stopped_at = Stage::receiving;
    final.stop_reason = final.receiving->reason;
  } else {
    final.rendering = run_rendering_stage(msg, scenario.render_profile(), scenario.protected_domains,
                                          render_context(msg, *final.receiving, scenario.suffixes));
  }
  finish(final);
  reports.push_back(final);
  return reports;
}

bool case_success(const std::vector<ChainReport>& reports) { return !reports.empty() && reports.back().success; }

}  // namespace spoofchain
