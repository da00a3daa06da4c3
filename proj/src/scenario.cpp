#include <algorithm>

#include "fixture_keys.hpp"
#include "spoofchain/config.hpp"
#include "spoofchain/error.hpp"
#include "spoofchain/simulator.hpp"
#include "spoofchain/text.hpp"

namespace spoofchain {

namespace {

const std::vector<std::string> kProtected{"a.com", "paypal.com", "gmail.com", "yahoo.com", "aliyun.com"};

const std::map<std::string, std::string> kMtaIps{
    {"a.com", "198.51.100.10"},     {"attack.com", "203.0.113.66"}, {"fwd.com", "192.0.2.20"},
    {"aliyun.com", "192.0.2.30"},   {"soft.com", "198.51.100.70"},  {"yahoo.com", "198.51.100.50"},
    {"paypal.com", "198.51.100.80"}, {"gmail.com", "198.51.100.90"},
};

struct Roles {
  const char* sender;
  const char* receiver;
  const char* forwarder;
  const char* renderer;  // nullptr: same as receiver
};

const std::map<std::string, Roles, std::less<>>& builtin_roles() {
  static const std::map<std::string, Roles, std::less<>> roles{
      {"strict-rfc", {"strict-rfc", "strict-rfc", "strict-rfc", nullptr}},
      {"zimbra-to-gmail", {"zimbra-like", "gmail-like", "gmail-like", nullptr}},
      {"sina-to-gmail", {"sina-like", "gmail-like", "gmail-like", nullptr}},
      {"yahoo-to-icloud", {"yahoo-like", "icloud-like", "icloud-like", nullptr}},
      {"yahoo", {"yahoo-like", "yahoo-like", "yahoo-like", nullptr}},
      {"icloud", {"icloud-like", "icloud-like", "icloud-like", nullptr}},
      {"qq", {"qq-like", "qq-like", "qq-like", nullptr}},
      {"gmail-thunderbird", {"gmail-like", "gmail-like", "gmail-like", "thunderbird-like"}},
      {"outlook", {"outlook-like", "outlook-like", "outlook-like", nullptr}},
      {"sina", {"sina-like", "sina-like", "sina-like", nullptr}},
      {"netease", {"netease-like", "netease-like", "netease-like", nullptr}},
      {"icloud-forward-gmail", {"icloud-like", "gmail-like", "icloud-like", nullptr}},
      {"aliyun-forward-gmail", {"aliyun-like", "gmail-like", "aliyun-like", nullptr}},
      {"office365-forward-zoho", {"office365-like", "zoho-like", "office365-like", nullptr}},
  };
  return roles;
}

QuirkProfile lookup_profile(std::string_view name, const std::filesystem::path& profiles_dir) {
  if (!profiles_dir.empty()) {
    auto file = profiles_dir / (std::string(name) + ".profile");
    if (std::filesystem::exists(file)) return parse_profile(read_file(file));
  }
  return builtin_profile(name);
}

}  // namespace

std::shared_ptr<const DnsZone> fixture_zone() {
  static const auto zone = std::make_shared<const DnsZone>(DnsZone::parse(fixtures::zone_text()));
  return zone;
}

std::map<std::string, DkimKeyPair> fixture_keys() {
  std::map<std::string, DkimKeyPair> keys;
  for (const char* domain : {"a.com", "aliyun.com", "fwd.com", "attack.com"}) {
    keys.emplace(domain, DkimKeyPair::from_pem(fixtures::fixture_key_pem(domain), "s1", domain));
  }
  return keys;
}

std::vector<std::string> builtin_scenario_names() {
  std::vector<std::string> out;
  for (const auto& [name, roles] : builtin_roles()) out.push_back(name);
  return out;
}

Scenario builtin_scenario(std::string_view name) {
  auto it = builtin_roles().find(name);
  if (it == builtin_roles().end()) throw Error(ErrorCode::config, "unknown scenario: " + std::string(name));
  const auto& r = it->second;
  Scenario s;
  s.name = it->first;
  s.sender = builtin_profile(r.sender);
  s.receiver = builtin_profile(r.receiver);
  s.forwarder = builtin_profile(r.forwarder);
  if (r.renderer) s.renderer = builtin_profile(r.renderer);
  s.resolver = fixture_zone();
  s.mta_ips = kMtaIps;
  s.keys = fixture_keys();
  s.protected_domains = kProtected;
  return s;
}

Scenario load_scenario(const std::filesystem::path& path, const std::filesystem::path& profiles_dir) {
  auto kv = parse_key_values(read_file(path));
  auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path f(p);
    return f.is_absolute() ? f : base / f;
  };
  auto require = [&](std::string_view key) {
    auto v = find_value(kv, key);
    if (!v) throw Error(ErrorCode::config, path.string() + ": missing " + std::string(key));
    return *v;
  };

  Scenario s;
  s.name = find_value(kv, "name").value_or(path.stem().string());
  s.receiver = lookup_profile(require("receiver"), profiles_dir);
  s.sender = find_value(kv, "sender") ? lookup_profile(*find_value(kv, "sender"), profiles_dir) : s.receiver;
  s.forwarder = find_value(kv, "forwarder") ? lookup_profile(*find_value(kv, "forwarder"), profiles_dir) : s.receiver;
  if (auto r = find_value(kv, "renderer")) s.renderer = lookup_profile(*r, profiles_dir);
  s.resolver = std::make_shared<const DnsZone>(DnsZone::parse(read_file(resolve(require("zone")))));
  if (auto sfx = find_value(kv, "suffixes")) s.suffixes = SuffixSet::parse(read_file(resolve(*sfx)));
  if (auto id = find_value(kv, "authserv_id")) s.authserv_id = *id;

  for (const auto& [key, value] : kv) {
    auto parts = text::split(value, ' ');
    parts.erase(std::remove(parts.begin(), parts.end(), std::string{}), parts.end());
    if (key == "key") {
      if (parts.size() != 3) throw Error(ErrorCode::config, path.string() + ": key needs <domain> <selector> <pem>");
      auto domain = text::to_lower(parts[0]);
      s.keys.insert_or_assign(domain, DkimKeyPair::from_pem(read_file(resolve(parts[2])), parts[1], domain));
    } else if (key == "mta_ip") {
      if (parts.size() != 2) throw Error(ErrorCode::config, path.string() + ": mta_ip needs <domain> <ip>");
      s.mta_ips[text::to_lower(parts[0])] = parts[1];
    } else if (key == "protected") {
      for (const auto& d : text::split(value, ',')) {
        auto t = text::trim(d);
        if (!t.empty()) s.protected_domains.push_back(text::to_lower(t));
      }
    } else if (key != "name" && key != "sender" && key != "receiver" && key != "forwarder" && key != "renderer" &&
               key != "zone" && key != "suffixes" && key != "authserv_id") {
      throw Error(ErrorCode::config, path.string() + ": unknown key " + key);
    }
  }
  return s;
}

Scenario resolve_scenario(std::string_view name_or_path, const std::filesystem::path& profiles_dir) {
  if (builtin_roles().contains(name_or_path)) return builtin_scenario(name_or_path);
  std::filesystem::path p(name_or_path);
  if (!std::filesystem::exists(p)) {
    throw Error(ErrorCode::config, "no builtin scenario or file named " + std::string(name_or_path));
  }
  return load_scenario(p, profiles_dir);
}

}  // namespace spoofchain
