#include <map>

#include "signing.hpp"
#include "spoofchain/error.hpp"
#include "spoofchain/text.hpp"

namespace spoofchain {

namespace {

constexpr std::string_view kAar = "ARC-Authentication-Results";
constexpr std::string_view kAms = "ARC-Message-Signature";
constexpr std::string_view kAs = "ARC-Seal";

std::optional<int> instance_of(const HeaderField& f) {
  for (const auto& t : signing::parse_tags(f.raw_value)) {
    if (t.name == "i") {
      try {
        std::size_t used = 0;
        int v = std::stoi(t.value, &used);
        if (used == t.value.size()) return v;
      } catch (const std::exception&) {
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

struct ArcSet {
  const HeaderField* aar = nullptr;
  const HeaderField* ams = nullptr;
  const HeaderField* as = nullptr;
};

struct Sets {
  std::map<int, ArcSet> by_instance;
  std::string problem;
};

Sets collect(const HeaderParse& parse) {
  Sets out;
  for (const auto& f : parse.fields) {
    const HeaderField** slot = nullptr;
    auto inst = instance_of(f);
    auto pick = [&](std::string_view name, const HeaderField* ArcSet::*member) {
      if (!signing::field_is(f, name)) return false;
      if (!inst) {
        out.problem = std::string(name) + " without a valid i= tag";
        return true;
      }
      slot = &(out.by_instance[*inst].*member);
      return true;
    };
    if (!pick(kAar, &ArcSet::aar) && !pick(kAms, &ArcSet::ams) && !pick(kAs, &ArcSet::as)) continue;
    if (!slot) continue;
    if (*slot) out.problem = "duplicate ARC field for instance " + std::to_string(*inst);
    *slot = &f;
  }
  return out;
}

// AAR, AMS, AS for instances 1..upto, the last seal with b= emptied.
std::string seal_data(const Sets& sets, int upto, std::string_view own_seal_raw_value) {
  std::string data;
  for (int i = 1; i <= upto; ++i) {
    const auto& set = sets.by_instance.at(i);
    data += canonicalize_header(set.aar->raw_name, set.aar->raw_value, Canon::relaxed);
    data += canonicalize_header(set.ams->raw_name, set.ams->raw_value, Canon::relaxed);
    if (i < upto) data += canonicalize_header(set.as->raw_name, set.as->raw_value, Canon::relaxed);
  }
  auto last = canonicalize_header(kAs, signing::strip_b_value(own_seal_raw_value), Canon::relaxed);
  data += last.substr(0, last.size() - 2);
  return data;
}

std::string tag_value(const HeaderField& f, std::string_view name) {
  auto tags = signing::parse_tags(f.raw_value);
  auto t = signing::find_tag(tags, name);
  return t ? t->value : std::string{};
}

}  // namespace

int arc_highest_instance(const RawMessage& msg) {
  int highest = 0;
  for (const auto& f : signing::fields_of(msg).fields) {
    if (!signing::field_is(f, kAs)) continue;
    if (auto i = instance_of(f)) highest = std::max(highest, *i);
  }
  return highest;
}

RawMessage arc_seal(const RawMessage& msg, const DkimKeyPair& key, int instance, const AuthVerdict& prior_verdict,
                    std::string_view authserv_id) {
  int highest = arc_highest_instance(msg);
  if (instance != highest + 1) {
    throw Error(ErrorCode::instance_gap,
                "seal instance " + std::to_string(instance) + " after highest " + std::to_string(highest));
  }
  std::string cv = "none";
  if (instance > 1) {
    // validate against nothing but structure here; signatures need a resolver
    auto parse = signing::fields_of(msg);
    auto sets = collect(parse);
    cv = sets.problem.empty() && static_cast<int>(sets.by_instance.size()) == highest ? "pass" : "fail";
  }
  const std::string inst = std::to_string(instance);
  RawMessage out = msg;
  prepend_header(out, kAar, "i=" + inst + "; " + format_auth_results(authserv_id, prior_verdict));

  auto parse = signing::fields_of(out);
  auto headers = default_signed_headers();
  std::string h;
  for (const auto& n : headers) h += (h.empty() ? "" : ":") + n;
  Canonicalization canon{Canon::relaxed, Canon::relaxed};
  std::string ams = "i=" + inst + "; a=" + std::string(to_string(key.algorithm)) + "; c=relaxed/relaxed; d=" +
                    key.domain + "; s=" + key.selector + ";\r\n\th=" + h +
                    "; bh=" + signing::body_hash(out, canon.body) + ";\r\n\tb=";
  std::string data = signing::select_headers(parse, headers, Canon::relaxed, std::nullopt);
  auto line = canonicalize_header(kAms, " " + ams, Canon::relaxed);
  data += line.substr(0, line.size() - 2);
  ams += text::base64_encode(signing::sign(key, data));
  prepend_header(out, kAms, ams);

  std::string seal = "i=" + inst + "; a=" + std::string(to_string(key.algorithm)) + "; cv=" + cv + "; d=" +
                     key.domain + "; s=" + key.selector + ";\r\n\tb=";
  // Seal input needs this instance's AAR and AMS in place.
  RawMessage staged = out;
  prepend_header(staged, kAs, seal);
  auto staged_parse = signing::fields_of(staged);
  auto sets = collect(staged_parse);
  seal += text::base64_encode(signing::sign(key, seal_data(sets, instance, " " + seal)));
  prepend_header(out, kAs, seal);
  return out;
}

ArcVerdict arc_validate(const RawMessage& msg, const Resolver& resolver) {
  ArcVerdict v;
  auto parse = signing::fields_of(msg);
  auto sets = collect(parse);
  v.instance_count = static_cast<int>(sets.by_instance.size());
  if (v.instance_count == 0) {
    v.detail = "no ARC sets";
    return v;
  }
  if (!sets.problem.empty()) {
    v.detail = sets.problem;
    return v;
  }
  int expected = 1;
  for (const auto& [i, set] : sets.by_instance) {
    if (i != expected++) {
      v.detail = "instance gap before " + std::to_string(i);
      return v;
    }
    if (!set.aar || !set.ams || !set.as) {
      v.detail = "incomplete ARC set " + std::to_string(i);
      return v;
    }
  }
  const auto& newest = sets.by_instance.rbegin()->second;
  auto aar_text = unfold(newest.aar->raw_value);
  if (auto p = aar_text.find("dmarc="); p != std::string::npos) {
    auto end = aar_text.find_first_of(" ;", p + 6);
    v.claimed_dmarc = aar_text.substr(p + 6, end == std::string::npos ? std::string::npos : end - p - 6);
  }
  for (const auto& [i, set] : sets.by_instance) {
    auto cv = tag_value(*set.as, "cv");
    if ((i == 1 && cv != "none") || (i > 1 && cv != "pass")) {
      v.detail = "seal " + std::to_string(i) + " has cv=" + cv;
      return v;
    }
    auto ams = signing::verify_field(parse, *set.ams, msg, resolver, false);
    if (ams.result != DkimResult::pass) {
      v.detail = "message signature " + std::to_string(i) + ": " + ams.detail;
      return v;
    }
    auto alg = signing::parse_algorithm(tag_value(*set.as, "a"));
    auto key = signing::fetch_key(resolver, tag_value(*set.as, "s"), canonical_name(tag_value(*set.as, "d")));
    auto sig = text::base64_decode(tag_value(*set.as, "b").empty() ? std::string{} : [&] {
      std::string b;
      for (char c : tag_value(*set.as, "b")) {
        if (c != ' ' && c != '\t' && c != '\r' && c != '\n') b += c;
      }
      return b;
    }());
    if (!alg || !key.key || key.key->algorithm != *alg || !sig ||
        !signing::verify(*key.key, seal_data(sets, i, set.as->raw_value), *sig)) {
      v.detail = "seal " + std::to_string(i) + " does not verify" + (key.error.empty() ? "" : ": " + key.error);
      return v;
    }
  }
  v.chain_valid = true;
  return v;
}

}  // namespace spoofchain
