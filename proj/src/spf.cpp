#include <arpa/inet.h>

#include <array>
#include <charconv>

#include "spoofchain/auth.hpp"
#include "spoofchain/text.hpp"

namespace spoofchain {

namespace {

constexpr int kLookupLimit = 10;

struct IpAddr {
  int family = 0;  // AF_INET or AF_INET6
  std::array<unsigned char, 16> bytes{};
};

std::optional<IpAddr> parse_ip(std::string_view s) {
  IpAddr ip;
  std::string str(text::trim(s));
  if (inet_pton(AF_INET, str.c_str(), ip.bytes.data()) == 1) {
    ip.family = AF_INET;
    return ip;
  }
  if (inet_pton(AF_INET6, str.c_str(), ip.bytes.data()) == 1) {
    ip.family = AF_INET6;
    // v4-mapped addresses compare as v4
    static constexpr unsigned char mapped[12] = {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0xff, 0xff};
    if (std::equal(std::begin(mapped), std::end(mapped), ip.bytes.begin())) {
      std::array<unsigned char, 16> v4{};
      std::copy(ip.bytes.begin() + 12, ip.bytes.end(), v4.begin());
      ip.bytes = v4;
      ip.family = AF_INET;
    }
    return ip;
  }
  return std::nullopt;
}

bool prefix_match(const IpAddr& a, const IpAddr& b, int prefix) {
  if (a.family != b.family) return false;
  int bits = a.family == AF_INET ? 32 : 128;
  if (prefix < 0 || prefix > bits) return false;
  for (int i = 0; i < prefix; ++i) {
    int byte = i / 8;
    int mask = 0x80 >> (i % 8);
    if ((a.bytes[byte] & mask) != (b.bytes[byte] & mask)) return false;
  }
  return true;
}

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

struct Evaluation {
  const Resolver& resolver;
  IpAddr client;
  int lookups = 0;
  std::string detail;
};

SpfResult qualifier_result(char q) {
  switch (q) {
    case '-': return SpfResult::fail;
    case '~': return SpfResult::softfail;
    case '?': return SpfResult::neutral;
    default: return SpfResult::pass;
  }
}

// Splits "domain/4//6" style arguments.
struct CidrArg {
  std::string domain;
  int v4 = 32;
  int v6 = 128;
  bool ok = true;
};

CidrArg parse_cidr_arg(std::string_view arg, std::string_view current) {
  CidrArg out;
  std::string_view dom = arg;
  auto slash = arg.find('/');
  if (slash != std::string_view::npos) {
    dom = arg.substr(0, slash);
    auto cidrs = arg.substr(slash);
    auto dbl = cidrs.find("//");
    std::string_view c4 = dbl == std::string_view::npos ? cidrs : cidrs.substr(0, dbl);
    std::string_view c6 = dbl == std::string_view::npos ? std::string_view{} : cidrs.substr(dbl + 2);
    if (dbl == 0) c4 = {};
    if (!c4.empty()) {
      auto v = parse_int(c4.substr(1));
      if (!v || *v > 32) out.ok = false; else out.v4 = *v;
    }
    if (!c6.empty()) {
      auto v = parse_int(c6);
      if (!v || *v > 128) out.ok = false; else out.v6 = *v;
    }
  }
  if (!dom.empty() && dom.front() == ':') dom.remove_prefix(1);
  out.domain = dom.empty() ? std::string(current) : canonical_name(dom);
  return out;
}

SpfResult check_host(Evaluation& ev, const std::string& domain, int depth);

// Returns: matched / not matched, or an error result.
struct MatchOutcome {
  bool matched = false;
  std::optional<SpfResult> error;
};

MatchOutcome match_hosts(Evaluation& ev, const std::string& domain, const CidrArg& cidr) {
  for (auto type : {RecordType::A, RecordType::AAAA}) {
    auto ans = ev.resolver.query(domain, type);
    if (ans.status == DnsStatus::error) return {false, SpfResult::temperror};
    int prefix = type == RecordType::A ? cidr.v4 : cidr.v6;
    for (const auto& v : ans.values) {
      auto ip = parse_ip(v);
      if (ip && prefix_match(ev.client, *ip, prefix)) return {true, std::nullopt};
    }
  }
  return {};
}

SpfResult check_host(Evaluation& ev, const std::string& domain, int depth) {
  if (depth > kLookupLimit) return SpfResult::permerror;
  auto ans = ev.resolver.query(domain, RecordType::TXT);
  if (ans.status == DnsStatus::error) {
    ev.detail = "txt lookup failed for " + domain;
    return SpfResult::temperror;
  }
  std::vector<std::string> records;
  for (const auto& v : ans.values) {
    auto lower = text::to_lower(text::trim(v));
    if (lower == "v=spf1" || lower.starts_with("v=spf1 ")) records.push_back(std::string(text::trim(v)));
  }
  if (records.empty()) {
    if (ev.detail.empty()) ev.detail = "no spf record at " + domain;
    return SpfResult::none;
  }
  if (records.size() > 1) {
    ev.detail = "multiple spf records at " + domain;
    return SpfResult::permerror;
  }
  const auto& record = records.front();
  if (record.find('%') != std::string::npos) {
    ev.detail = "macros are not supported";
    return SpfResult::permerror;
  }

  std::optional<std::string> redirect;
  auto terms = text::split(record, ' ');
  for (std::size_t t = 1; t < terms.size(); ++t) {
    auto term = text::trim(terms[t]);
    if (term.empty()) continue;
    auto eq = term.find('=');
    auto colon = term.find_first_of(":/");
    if (eq != std::string_view::npos && (colon == std::string_view::npos || eq < colon)) {
      auto name = text::to_lower(term.substr(0, eq));
      if (name == "redirect") {
        if (redirect) {
          ev.detail = "duplicate redirect";
          return SpfResult::permerror;
        }
        redirect = canonical_name(term.substr(eq + 1));
      }
      continue;  // exp= and unknown modifiers are ignored
    }
    char qualifier = '+';
    if (std::string_view("+-~?").find(term.front()) != std::string_view::npos) {
      qualifier = term.front();
      term.remove_prefix(1);
    }
    auto name_end = term.find_first_of(":/");
    auto mech = text::to_lower(term.substr(0, name_end));
    auto arg = name_end == std::string_view::npos ? std::string_view{} : term.substr(name_end);
    bool matched = false;

    if (mech == "all") {
      if (!arg.empty()) return SpfResult::permerror;
      matched = true;
    } else if (mech == "ip4" || mech == "ip6") {
      if (arg.empty() || arg.front() != ':') return SpfResult::permerror;
      auto net = arg.substr(1);
      auto slash = net.find('/');
      auto ip = parse_ip(net.substr(0, slash));
      int bits = mech == "ip4" ? 32 : 128;
      int prefix = bits;
      if (slash != std::string_view::npos) {
        auto p = parse_int(net.substr(slash + 1));
        if (!p || *p > bits) return SpfResult::permerror;
        prefix = *p;
      }
      if (!ip || (ip->family == AF_INET) != (mech == "ip4")) {
        ev.detail = "bad " + mech + " argument";
        return SpfResult::permerror;
      }
      matched = prefix_match(ev.client, *ip, prefix);
    } else if (mech == "a") {
      if (++ev.lookups > kLookupLimit) return SpfResult::permerror;
      auto cidr = parse_cidr_arg(arg, domain);
      if (!cidr.ok) return SpfResult::permerror;
      auto m = match_hosts(ev, cidr.domain, cidr);
      if (m.error) return *m.error;
      matched = m.matched;
    } else if (mech == "mx") {
      if (++ev.lookups > kLookupLimit) return SpfResult::permerror;
      auto cidr = parse_cidr_arg(arg, domain);
      if (!cidr.ok) return SpfResult::permerror;
      auto mx = ev.resolver.query(cidr.domain, RecordType::MX);
      if (mx.status == DnsStatus::error) return SpfResult::temperror;
      for (const auto& v : mx.values) {
        auto parts = text::split(text::trim(v), ' ');
        auto host = canonical_name(parts.back());
        auto m = match_hosts(ev, host, cidr);
        if (m.error) return *m.error;
        if (m.matched) {
          matched = true;
          break;
        }
      }
    } else if (mech == "include") {
      if (arg.size() < 2 || arg.front() != ':') return SpfResult::permerror;
      if (++ev.lookups > kLookupLimit) {
        ev.detail = "dns lookup limit exceeded";
        return SpfResult::permerror;
      }
      auto sub = check_host(ev, canonical_name(arg.substr(1)), depth + 1);
      switch (sub) {
        case SpfResult::pass: matched = true; break;
        case SpfResult::fail:
        case SpfResult::softfail:
        case SpfResult::neutral: break;
        case SpfResult::temperror: return SpfResult::temperror;
        case SpfResult::none:
        case SpfResult::permerror: return SpfResult::permerror;
      }
    } else {
      ev.detail = "unsupported mechanism " + mech;
      return SpfResult::permerror;
    }
    if (matched) {
      ev.detail = "matched " + std::string(1, qualifier) + mech + std::string(arg) + " at " + domain;
      return qualifier_result(qualifier);
    }
  }
  if (redirect) {
    if (++ev.lookups > kLookupLimit) {
      ev.detail = "dns lookup limit exceeded";
      return SpfResult::permerror;
    }
    auto r = check_host(ev, *redirect, depth + 1);
    return r == SpfResult::none ? SpfResult::permerror : r;
  }
  ev.detail = "no mechanism matched at " + domain;
  return SpfResult::neutral;
}

}  // namespace

bool ip_in_network(std::string_view ip, std::string_view network, int prefix) {
  auto a = parse_ip(ip);
  auto b = parse_ip(network);
  return a && b && prefix_match(*a, *b, prefix);
}

SpfResult spf_check_host(std::string_view client_ip, std::string_view domain, const Resolver& resolver,
                         std::string* detail) {
  auto ip = parse_ip(client_ip);
  if (!ip) {
    if (detail) *detail = "unparsable client ip";
    return SpfResult::permerror;
  }
  Evaluation ev{resolver, *ip, 0, {}};
  auto name = canonical_name(domain);
  auto r = name.empty() ? SpfResult::none : check_host(ev, name, 0);
  if (detail) *detail = ev.detail;
  return r;
}

SpfVerdict spf_evaluate(std::string_view client_ip, std::string_view helo_domain,
                        const std::optional<std::string>& mail_from, const Resolver& resolver,
                        const QuirkProfile& profile) {
  SpfVerdict v;
  if (mail_from && !mail_from->empty()) {
    v.identity_source = IdentitySource::mail_from;
    v.identity_domain = canonical_name(address_domain(*mail_from));
  } else {
    v.identity_source = IdentitySource::helo;
    v.identity_domain = canonical_name(helo_domain);
    if (!profile.spf_helo_fallback) {
      v.result = SpfResult::none;
      v.detail = "empty mail from, helo not evaluated";
      return v;
    }
  }
  v.result = spf_check_host(client_ip, v.identity_domain, resolver, &v.detail);
  return v;
}

}  // namespace spoofchain
