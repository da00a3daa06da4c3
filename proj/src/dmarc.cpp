#include "signing.hpp"
#include "spoofchain/auth.hpp"
#include "spoofchain/error.hpp"
#include "spoofchain/text.hpp"

namespace spoofchain {

std::string_view to_string(DmarcResult v) {
  switch (v) {
    case DmarcResult::pass: return "pass";
    case DmarcResult::fail: return "fail";
    case DmarcResult::none: return "none";
    case DmarcResult::temperror: return "temperror";
  }
  return "?";
}

std::string_view to_string(AlignedVia v) {
  switch (v) {
    case AlignedVia::spf: return "spf";
    case AlignedVia::dkim: return "dkim";
    case AlignedVia::none: return "none";
  }
  return "?";
}

std::string_view to_string(DmarcPolicy v) {
  switch (v) {
    case DmarcPolicy::none: return "none";
    case DmarcPolicy::quarantine: return "quarantine";
    case DmarcPolicy::reject: return "reject";
  }
  return "?";
}

SuffixSet SuffixSet::builtin() {
  return {{"com", "net", "org", "co.uk", "com.cn", "cn", "uk", "test", "example"}};
}

SuffixSet SuffixSet::parse(std::string_view t) {
  SuffixSet s;
  for (auto line : text::split(t, '\n')) {
    auto v = text::trim(line);
    if (v.empty() || v.front() == '#') continue;
    s.suffixes.insert(canonical_name(v));
  }
  return s;
}

std::string org_domain(std::string_view domain, const SuffixSet& suffixes) {
  auto d = canonical_name(domain);
  if (d.empty()) throw Error(ErrorCode::domain_is_suffix, "empty domain");
  auto labels = text::split(d, '.');
  // longest suffix first: try the shortest tail that still leaves a label
  for (std::size_t skip = 0; skip < labels.size(); ++skip) {
    std::string tail;
    for (std::size_t i = skip; i < labels.size(); ++i) {
      if (!tail.empty()) tail += '.';
      tail += labels[i];
    }
    if (suffixes.suffixes.contains(tail)) {
      if (skip == 0) throw Error(ErrorCode::domain_is_suffix, d + " is a public suffix");
      std::string org(labels[skip - 1]);
      return org + "." + tail;
    }
  }
  // unknown suffix: treat the last label as the suffix
  if (labels.size() < 2) throw Error(ErrorCode::domain_is_suffix, d + " has no registrable part");
  return std::string(labels[labels.size() - 2]) + "." + std::string(labels.back());
}

namespace {

struct DmarcRecord {
  DmarcPolicy p = DmarcPolicy::none;
  std::optional<DmarcPolicy> sp;
  bool strict_spf = false;
  bool strict_dkim = false;
};

std::optional<DmarcPolicy> parse_policy(std::string_view v) {
  auto l = text::to_lower(v);
  if (l == "none") return DmarcPolicy::none;
  if (l == "quarantine") return DmarcPolicy::quarantine;
  if (l == "reject") return DmarcPolicy::reject;
  return std::nullopt;
}

enum class Lookup { found, missing, error };

Lookup fetch_record(const Resolver& resolver, const std::string& domain, DmarcRecord& out) {
  auto ans = resolver.query("_dmarc." + domain, RecordType::TXT);
  if (ans.status == DnsStatus::error) return Lookup::error;
  std::vector<std::string> candidates;
  for (const auto& v : ans.values) {
    auto tags = signing::parse_tags(v);
    if (!tags.empty() && tags.front().name == "v" && tags.front().value == "DMARC1") candidates.push_back(v);
  }
  if (candidates.size() != 1) return Lookup::missing;
  auto tags = signing::parse_tags(candidates.front());
  auto p = signing::find_tag(tags, "p");
  if (!p) return Lookup::missing;
  auto policy = parse_policy(p->value);
  if (!policy) return Lookup::missing;
  out.p = *policy;
  if (auto sp = signing::find_tag(tags, "sp")) out.sp = parse_policy(sp->value);
  if (auto a = signing::find_tag(tags, "aspf")) out.strict_spf = text::iequals(a->value, "s");
  if (auto a = signing::find_tag(tags, "adkim")) out.strict_dkim = text::iequals(a->value, "s");
  // pct= is read by nothing: every message is treated as sampled
  return Lookup::found;
}

bool aligned(const std::string& from, const std::string& id, bool strict, const SuffixSet& suffixes) {
  if (id.empty()) return false;
  if (from == id) return true;
  if (strict) return false;
  try {
    return org_domain(from, suffixes) == org_domain(id, suffixes);
  } catch (const Error&) {
    return false;
  }
}

}  // namespace

DmarcVerdict dmarc_evaluate(std::string_view from_domain, const SpfVerdict& spf,
                            const std::vector<DkimEntry>& dkim, const Resolver& resolver,
                            const QuirkProfile& profile, const SuffixSet& suffixes) {
  DmarcVerdict v;
  v.from_domain = canonical_name(from_domain);
  if (v.from_domain.empty()) {
    v.detail = "no From domain";
    return v;
  }
  DmarcRecord record;
  bool subdomain_policy = false;
  auto status = fetch_record(resolver, v.from_domain, record);
  v.record_domain = v.from_domain;
  if (status == Lookup::missing && profile.dmarc_org_fallback) {
    std::string org;
    try {
      org = org_domain(v.from_domain, suffixes);
    } catch (const Error&) {
    }
    if (!org.empty() && org != v.from_domain) {
      status = fetch_record(resolver, org, record);
      v.record_domain = org;
      subdomain_policy = true;
    }
  }
  if (status == Lookup::error) {
    v.result = DmarcResult::temperror;
    v.detail = "policy lookup failed";
    return v;
  }
  if (status == Lookup::missing) {
    v.record_domain.clear();
    v.detail = "no policy record";
    return v;
  }
  if (spf.result == SpfResult::pass &&
      aligned(v.from_domain, canonical_name(spf.identity_domain), record.strict_spf, suffixes)) {
    v.result = DmarcResult::pass;
    v.aligned_via = AlignedVia::spf;
    return v;
  }
  for (const auto& d : dkim) {
    if (d.result == DkimResult::pass && aligned(v.from_domain, canonical_name(d.domain), record.strict_dkim, suffixes)) {
      v.result = DmarcResult::pass;
      v.aligned_via = AlignedVia::dkim;
      return v;
    }
  }
  v.result = DmarcResult::fail;
  v.policy_applied = subdomain_policy && record.sp ? *record.sp : record.p;
  v.detail = "no aligned pass";
  return v;
}

std::string_view to_string(SpfResult v) {
  switch (v) {
    case SpfResult::pass: return "pass";
    case SpfResult::fail: return "fail";
    case SpfResult::softfail: return "softfail";
    case SpfResult::neutral: return "neutral";
    case SpfResult::none: return "none";
    case SpfResult::temperror: return "temperror";
    case SpfResult::permerror: return "permerror";
  }
  return "?";
}

std::string_view to_string(IdentitySource v) { return v == IdentitySource::helo ? "helo" : "mail-from"; }

std::string format_auth_results(std::string_view authserv_id, const AuthVerdict& verdict) {
  std::string out(authserv_id);
  out += "; spf=" + std::string(to_string(verdict.spf.result));
  out += verdict.spf.identity_source == IdentitySource::helo ? " smtp.helo=" : " smtp.mailfrom=";
  out += verdict.spf.identity_domain;
  if (verdict.dkim.empty()) out += "; dkim=none";
  for (const auto& d : verdict.dkim) {
    out += "; dkim=" + std::string(to_string(d.result)) + " header.d=" + d.domain + " header.s=" + d.selector;
  }
  out += "; dmarc=" + std::string(to_string(verdict.dmarc.result)) + " header.from=" + verdict.dmarc.from_domain;
  return out;
}

}  // namespace spoofchain
