#include "spoofchain/dns.hpp"

#include <arpa/inet.h>
#include <arpa/nameser.h>
#include <netdb.h>
#include <netinet/in.h>
#include <resolv.h>

#include <array>
#include <cstring>

#include "spoofchain/error.hpp"
#include "spoofchain/text.hpp"

namespace spoofchain {

std::string_view to_string(RecordType t) {
  switch (t) {
    case RecordType::TXT: return "TXT";
    case RecordType::A: return "A";
    case RecordType::AAAA: return "AAAA";
    case RecordType::MX: return "MX";
  }
  return "?";
}

RecordType parse_record_type(std::string_view s) {
  auto u = text::to_lower(s);
  if (u == "txt") return RecordType::TXT;
  if (u == "a") return RecordType::A;
  if (u == "aaaa") return RecordType::AAAA;
  if (u == "mx") return RecordType::MX;
  throw Error(ErrorCode::config, "unknown record type " + std::string(s));
}

std::string canonical_name(std::string_view name) {
  auto n = text::to_lower(text::trim(name));
  while (!n.empty() && n.back() == '.') n.pop_back();
  return n;
}

namespace {

// Concatenates quoted segments; unquoted text is taken as-is.
std::string unquote_txt(std::string_view v, std::size_t line) {
  v = text::trim(v);
  if (v.empty() || v.front() != '"') return std::string(v);
  std::string out;
  std::size_t i = 0;
  while (i < v.size()) {
    if (v[i] == ' ' || v[i] == '\t') { ++i; continue; }
    if (v[i] != '"') {
      throw Error(ErrorCode::config, "zone line " + std::to_string(line) + ": text outside quotes");
    }
    ++i;
    bool closed = false;
    while (i < v.size()) {
      if (v[i] == '\\' && i + 1 < v.size()) {
        out += v[i + 1];
        i += 2;
        continue;
      }
      if (v[i] == '"') {
        closed = true;
        ++i;
        break;
      }
      out += v[i++];
    }
    if (!closed) throw Error(ErrorCode::config, "zone line " + std::to_string(line) + ": unterminated quote");
  }
  return out;
}

}  // namespace

DnsZone DnsZone::parse(std::string_view text) {
  DnsZone zone;
  std::size_t lineno = 0;
  for (auto line : text::split(text, '\n')) {
    ++lineno;
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto sp1 = t.find_first_of(" \t");
    if (sp1 == std::string_view::npos) {
      throw Error(ErrorCode::config, "zone line " + std::to_string(lineno) + ": missing type");
    }
    auto name = t.substr(0, sp1);
    auto rest = text::trim(t.substr(sp1));
    auto sp2 = rest.find_first_of(" \t");
    auto type = rest.substr(0, sp2);
    auto value = sp2 == std::string_view::npos ? std::string_view{} : text::trim(rest.substr(sp2));
    if (text::iequals(type, "SERVFAIL")) {
      zone.add_failure(name);
      continue;
    }
    auto rt = parse_record_type(type);
    if (value.empty()) {
      throw Error(ErrorCode::config, "zone line " + std::to_string(lineno) + ": missing value");
    }
    zone.add(name, rt, rt == RecordType::TXT ? unquote_txt(value, lineno) : std::string(value));
  }
  return zone;
}

void DnsZone::add(std::string_view name, RecordType type, std::string value) {
  auto n = canonical_name(name);
  names_.insert(n);
  records_[{n, type}].push_back(std::move(value));
}

void DnsZone::add_failure(std::string_view name) { failing_.insert(canonical_name(name)); }

DnsAnswer DnsZone::query(std::string_view name, RecordType type) const {
  auto n = canonical_name(name);
  if (failing_.contains(n)) return {DnsStatus::error, {}};
  auto it = records_.find({n, type});
  if (it != records_.end()) return {DnsStatus::ok, it->second};
  // name exists with other types: empty answer, not nxdomain
  return {names_.contains(n) ? DnsStatus::ok : DnsStatus::nxdomain, {}};
}

std::string DnsZone::to_text() const {
  std::string out;
  for (const auto& n : failing_) out += n + " SERVFAIL\n";
  for (const auto& [key, values] : records_) {
    for (const auto& v : values) {
      out += key.first;
      out += ' ';
      out += to_string(key.second);
      out += ' ';
      if (key.second == RecordType::TXT) {
        out += '"';
        for (char c : v) {
          if (c == '"' || c == '\\') out += '\\';
          out += c;
        }
        out += '"';
      } else {
        out += v;
      }
      out += '\n';
    }
  }
  return out;
}

DnsAnswer LiveResolver::query(std::string_view name, RecordType type) const {
  struct __res_state state;
  std::memset(&state, 0, sizeof state);
  if (res_ninit(&state) != 0) return {DnsStatus::error, {}};
  int qtype = ns_t_txt;
  switch (type) {
    case RecordType::TXT: qtype = ns_t_txt; break;
    case RecordType::A: qtype = ns_t_a; break;
    case RecordType::AAAA: qtype = ns_t_aaaa; break;
    case RecordType::MX: qtype = ns_t_mx; break;
  }
  std::array<unsigned char, 8192> buf{};
  auto qname = canonical_name(name);
  int len = res_nquery(&state, qname.c_str(), ns_c_in, qtype, buf.data(), static_cast<int>(buf.size()));
  if (len < 0) {
    DnsAnswer a;
    switch (state.res_h_errno) {
      case HOST_NOT_FOUND: a.status = DnsStatus::nxdomain; break;
      case NO_DATA: a.status = DnsStatus::ok; break;
      default: a.status = DnsStatus::error; break;
    }
    res_nclose(&state);
    return a;
  }
  res_nclose(&state);
  ns_msg msg;
  if (ns_initparse(buf.data(), len, &msg) != 0) return {DnsStatus::error, {}};
  DnsAnswer answer{DnsStatus::ok, {}};
  for (int i = 0; i < ns_msg_count(msg, ns_s_an); ++i) {
    ns_rr rr;
    if (ns_parserr(&msg, ns_s_an, i, &rr) != 0) continue;
    if (ns_rr_type(rr) != qtype) continue;
    const unsigned char* rd = ns_rr_rdata(rr);
    std::size_t rdlen = ns_rr_rdlen(rr);
    switch (type) {
      case RecordType::TXT: {
        std::string v;
        for (std::size_t p = 0; p < rdlen;) {
          std::size_t seg = rd[p++];
          v.append(reinterpret_cast<const char*>(rd + p), std::min<std::size_t>(seg, rdlen - p));
          p += seg;
        }
        answer.values.push_back(std::move(v));
        break;
      }
      case RecordType::A:
      case RecordType::AAAA: {
        char out[INET6_ADDRSTRLEN];
        int af = type == RecordType::A ? AF_INET : AF_INET6;
        if (inet_ntop(af, rd, out, sizeof out)) answer.values.emplace_back(out);
        break;
      }
      case RecordType::MX: {
        char host[NS_MAXDNAME];
        if (rdlen < 2) break;
        int pref = ns_get16(rd);
        if (dn_expand(ns_msg_base(msg), ns_msg_end(msg), rd + 2, host, sizeof host) < 0) break;
        answer.values.push_back(std::to_string(pref) + " " + host);
        break;
      }
    }
  }
  return answer;
}

}  // namespace spoofchain
