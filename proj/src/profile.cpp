#include "spoofchain/profile.hpp"

#include <array>
#include <cstdio>
#include <sstream>

#include "spoofchain/config.hpp"
#include "spoofchain/error.hpp"
#include "spoofchain/text.hpp"

namespace spoofchain {

namespace {

template <typename E, std::size_t N>
using Names = std::array<std::pair<E, std::string_view>, N>;

constexpr Names<ParseMode, 2> parse_mode_names{{{ParseMode::strict, "strict"},
                                                {ParseMode::lenient, "lenient"}}};
constexpr Names<MultipleFrom, 4> multiple_from_names{{{MultipleFrom::reject, "reject"},
                                                      {MultipleFrom::use_first, "use-first"},
                                                      {MultipleFrom::use_last, "use-last"},
                                                      {MultipleFrom::show_all, "show-all"}}};
constexpr Names<DisplayFrom, 3> display_from_names{
    {{DisplayFrom::first, "first"}, {DisplayFrom::last, "last"}, {DisplayFrom::all, "all"}}};
constexpr Names<TruncationCause, 3> truncation_names{
    {{TruncationCause::nul, "nul"},
     {TruncationCause::invisible_unicode, "invisible-unicode"},
     {TruncationCause::semantic_char, "semantic-char"}}};
constexpr Names<NullMembers, 2> null_names{{{NullMembers::reject, "reject"},
                                            {NullMembers::skip, "skip"}}};
constexpr Names<RouteHandling, 3> route_names{{{RouteHandling::strip, "strip"},
                                               {RouteHandling::reject, "reject"},
                                               {RouteHandling::first_hop, "first-hop"}}};
constexpr Names<CommentHandling, 2> comment_names{{{CommentHandling::strip, "strip"},
                                                   {CommentHandling::literal, "literal"}}};
constexpr Names<ForwardDkim, 3> forward_names{{{ForwardDkim::never, "never"},
                                               {ForwardDkim::always, "always"},
                                               {ForwardDkim::only_if_verified, "only-if-verified"}}};
constexpr Names<IdnDisplay, 2> idn_names{{{IdnDisplay::unicode, "unicode"},
                                          {IdnDisplay::ascii, "ascii"}}};
constexpr Names<FromCheck, 4> from_check_names{{{FromCheck::none, "none"},
                                                {FromCheck::first_from, "first-from"},
                                                {FromCheck::membership, "membership"},
                                                {FromCheck::exact, "exact"}}};
constexpr Names<Alert, 5> alert_names{{{Alert::sic, "sic"},
                                       {Alert::homograph, "homograph"},
                                       {Alert::rtl_override, "rtl-override"},
                                       {Alert::invisible_chars, "invisible-chars"},
                                       {Alert::multiple_from, "multiple-from"}}};

template <typename E, std::size_t N>
std::string_view name_of(const Names<E, N>& names, E v) {
  for (const auto& [e, n] : names) {
    if (e == v) return n;
  }
  return "?";
}

template <typename E, std::size_t N>
E parse_enum(const Names<E, N>& names, std::string_view key, std::string_view s) {
  for (const auto& [e, n] : names) {
    if (n == s) return e;
  }
  throw Error(ErrorCode::config, std::string(key) + ": unknown variant '" + std::string(s) + "'");
}

std::vector<std::string> list_items(std::string_view value) {
  std::vector<std::string> out;
  for (auto& item : text::split(value, ',')) {
    auto t = text::trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

char32_t parse_codepoint(std::string_view s) {
  if (!text::starts_with_ci(s, "U+") || s.size() < 3) {
    throw Error(ErrorCode::config, "expected U+XXXX, got '" + std::string(s) + "'");
  }
  try {
    std::size_t used = 0;
    auto v = std::stoul(std::string(s.substr(2)), &used, 16);
    if (used != s.size() - 2 || v > 0x10FFFF) throw std::out_of_range("cp");
    return static_cast<char32_t>(v);
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::config, "bad codepoint '" + std::string(s) + "'");
  }
}

std::string format_codepoint(char32_t cp) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "U+%04X", static_cast<unsigned>(cp));
  return buf;
}

std::set<char32_t> parse_cp_set(std::string_view value) {
  std::set<char32_t> out;
  for (const auto& item : list_items(value)) out.insert(parse_codepoint(item));
  return out;
}

std::string format_cp_set(const std::set<char32_t>& s) {
  std::string out;
  for (auto cp : s) {
    if (!out.empty()) out += ", ";
    out += format_codepoint(cp);
  }
  return out;
}

}  // namespace

std::string_view to_string(ParseMode v) { return name_of(parse_mode_names, v); }
std::string_view to_string(MultipleFrom v) { return name_of(multiple_from_names, v); }
std::string_view to_string(DisplayFrom v) { return name_of(display_from_names, v); }
std::string_view to_string(TruncationCause v) { return name_of(truncation_names, v); }
std::string_view to_string(NullMembers v) { return name_of(null_names, v); }
std::string_view to_string(RouteHandling v) { return name_of(route_names, v); }
std::string_view to_string(CommentHandling v) { return name_of(comment_names, v); }
std::string_view to_string(ForwardDkim v) { return name_of(forward_names, v); }
std::string_view to_string(IdnDisplay v) { return name_of(idn_names, v); }
std::string_view to_string(FromCheck v) { return name_of(from_check_names, v); }
std::string_view to_string(Alert v) { return name_of(alert_names, v); }
Alert parse_alert(std::string_view s) { return parse_enum(alert_names, "alert", s); }

bool QuirkProfile::is_invisible(char32_t cp) const {
  for (const auto& r : invisible_ranges) {
    if (r.contains(cp)) return true;
  }
  return false;
}

std::vector<CodepointRange> QuirkProfile::default_invisible_ranges() {
  // C0 controls minus TAB/LF/CR and the halfwidth/specials block. Raw bytes
  // that are not valid UTF-8 are matched separately (see is_invisible_raw).
  return {{0x00, 0x08}, {0x0B, 0x0C}, {0x0E, 0x1F}, {0xFF00, 0xFFFF}};
}

std::set<char32_t> QuirkProfile::default_semantic_chars() {
  return {U'[', U']', U'{', U'}', U'\t', U'\r', U'\n', U';'};
}

QuirkProfile parse_profile(std::string_view document) {
  QuirkProfile p;
  for (const auto& [key, value] : parse_key_values(document)) {
    if (key == "name") p.name = value;
    else if (key == "parse_mode") p.parse_mode = parse_enum(parse_mode_names, key, value);
    else if (key == "multiple_from") p.multiple_from = parse_enum(multiple_from_names, key, value);
    else if (key == "display_from") p.display_from = parse_enum(display_from_names, key, value);
    else if (key == "decode_encoded_word_for_display") p.decode_encoded_word_for_display = parse_bool(value);
    else if (key == "decode_encoded_word_for_auth") p.decode_encoded_word_for_auth = parse_bool(value);
    else if (key == "truncation") {
      p.truncation.clear();
      for (const auto& item : list_items(value)) p.truncation.insert(parse_enum(truncation_names, key, item));
    } else if (key == "invisible_ranges") {
      p.invisible_ranges.clear();
      for (const auto& item : list_items(value)) {
        auto dash = item.find('-');
        auto lo = parse_codepoint(item.substr(0, dash));
        auto hi = dash == std::string::npos ? lo : parse_codepoint(item.substr(dash + 1));
        if (lo > hi) throw Error(ErrorCode::config, "invisible_ranges: lo > hi in " + item);
        p.invisible_ranges.push_back({lo, hi});
      }
    } else if (key == "semantic_chars") p.semantic_chars = parse_cp_set(value);
    else if (key == "null_list_members") p.null_list_members = parse_enum(null_names, key, value);
    else if (key == "route_handling") p.route_handling = parse_enum(route_names, key, value);
    else if (key == "comment_handling") p.comment_handling = parse_enum(comment_names, key, value);
    else if (key == "check_auth_matches_mail_from") p.check_auth_matches_mail_from = parse_bool(value);
    else if (key == "from_check") p.from_check = parse_enum(from_check_names, key, value);
    else if (key == "spf_helo_fallback") p.spf_helo_fallback = parse_bool(value);
    else if (key == "dmarc_org_fallback") p.dmarc_org_fallback = parse_bool(value);
    else if (key == "reject_on_spf_fail") p.reject_on_spf_fail = parse_bool(value);
    else if (key == "trust_arc_pass") p.trust_arc_pass = parse_bool(value);
    else if (key == "forward_adds_dkim") p.forward_adds_dkim = parse_enum(forward_names, key, value);
    else if (key == "forward_requires_auth") p.forward_requires_auth = parse_bool(value);
    else if (key == "arc_seal_on_forward") p.arc_seal_on_forward = parse_bool(value);
    else if (key == "arc_falsify_dmarc") p.arc_falsify_dmarc = parse_bool(value);
    else if (key == "sic_enabled") p.sic_enabled = parse_bool(value);
    else if (key == "shown_alerts") {
      p.shown_alerts.clear();
      for (const auto& item : list_items(value)) p.shown_alerts.insert(parse_alert(item));
    } else if (key == "display_drop_chars") p.display_drop_chars = parse_cp_set(value);
    else if (key == "idn_display") p.idn_display = parse_enum(idn_names, key, value);
    else if (key == "render_bidi") p.render_bidi = parse_bool(value);
    else throw Error(ErrorCode::config, "unknown profile key: " + key);
  }
  return p;
}

std::string format_profile(const QuirkProfile& p) {
  std::ostringstream out;
  auto b = [](bool v) { return v ? "true" : "false"; };
  out << "name = " << p.name << '\n'
      << "parse_mode = " << to_string(p.parse_mode) << '\n'
      << "multiple_from = " << to_string(p.multiple_from) << '\n'
      << "display_from = " << to_string(p.display_from) << '\n'
      << "decode_encoded_word_for_display = " << b(p.decode_encoded_word_for_display) << '\n'
      << "decode_encoded_word_for_auth = " << b(p.decode_encoded_word_for_auth) << '\n';
  out << "truncation = ";
  bool first = true;
  for (auto c : p.truncation) {
    out << (first ? "" : ", ") << to_string(c);
    first = false;
  }
  out << "\ninvisible_ranges = ";
  first = true;
  for (const auto& r : p.invisible_ranges) {
    out << (first ? "" : ", ") << format_codepoint(r.lo) << '-' << format_codepoint(r.hi);
    first = false;
  }
  out << "\nsemantic_chars = " << format_cp_set(p.semantic_chars) << '\n'
      << "null_list_members = " << to_string(p.null_list_members) << '\n'
      << "route_handling = " << to_string(p.route_handling) << '\n'
      << "comment_handling = " << to_string(p.comment_handling) << '\n'
      << "check_auth_matches_mail_from = " << b(p.check_auth_matches_mail_from) << '\n'
      << "from_check = " << to_string(p.from_check) << '\n'
      << "spf_helo_fallback = " << b(p.spf_helo_fallback) << '\n'
      << "dmarc_org_fallback = " << b(p.dmarc_org_fallback) << '\n'
      << "reject_on_spf_fail = " << b(p.reject_on_spf_fail) << '\n'
      << "trust_arc_pass = " << b(p.trust_arc_pass) << '\n'
      << "forward_adds_dkim = " << to_string(p.forward_adds_dkim) << '\n'
      << "forward_requires_auth = " << b(p.forward_requires_auth) << '\n'
      << "arc_seal_on_forward = " << b(p.arc_seal_on_forward) << '\n'
      << "arc_falsify_dmarc = " << b(p.arc_falsify_dmarc) << '\n'
      << "sic_enabled = " << b(p.sic_enabled) << '\n';
  out << "shown_alerts = ";
  first = true;
  for (auto a : p.shown_alerts) {
    out << (first ? "" : ", ") << to_string(a);
    first = false;
  }
  out << "\ndisplay_drop_chars = " << format_cp_set(p.display_drop_chars) << '\n'
      << "idn_display = " << to_string(p.idn_display) << '\n'
      << "render_bidi = " << b(p.render_bidi) << '\n';
  return out.str();
}

namespace {

const std::set<Alert> all_alerts{Alert::sic, Alert::homograph, Alert::rtl_override,
                                 Alert::invisible_chars, Alert::multiple_from};

QuirkProfile make_strict() {
  QuirkProfile p;
  p.name = "strict-rfc";
  p.parse_mode = ParseMode::strict;
  p.multiple_from = MultipleFrom::reject;
  p.display_from = DisplayFrom::all;
  p.null_list_members = NullMembers::reject;
  p.route_handling = RouteHandling::reject;
  p.check_auth_matches_mail_from = true;
  p.from_check = FromCheck::exact;
  p.spf_helo_fallback = true;
  p.dmarc_org_fallback = true;
  p.reject_on_spf_fail = true;
  p.forward_adds_dkim = ForwardDkim::only_if_verified;
  p.forward_requires_auth = true;
  p.arc_seal_on_forward = true;
  p.sic_enabled = true;
  p.shown_alerts = all_alerts;
  p.idn_display = IdnDisplay::unicode;
  p.render_bidi = true;
  return p;
}

// Lenient base shared by the vendor-like fixtures; each fixture flips only
// the knobs its row is known for.
QuirkProfile lenient(std::string name) {
  QuirkProfile p;
  p.name = std::move(name);
  p.parse_mode = ParseMode::lenient;
  p.multiple_from = MultipleFrom::reject;
  p.display_from = DisplayFrom::first;
  p.check_auth_matches_mail_from = true;
  p.from_check = FromCheck::exact;
  return p;
}

std::map<std::string, QuirkProfile> make_builtins() {
  std::map<std::string, QuirkProfile> m;
  auto add = [&](QuirkProfile p) { m.emplace(p.name, std::move(p)); };

  add(make_strict());

  {
    auto p = lenient("zimbra-like");
    p.check_auth_matches_mail_from = false;
    p.from_check = FromCheck::none;
    add(p);
  }
  {
    auto p = lenient("sina-like");
    p.from_check = FromCheck::none;
    p.dmarc_org_fallback = false;
    add(p);
  }
  {
    auto p = lenient("yahoo-like");
    p.from_check = FromCheck::first_from;
    p.spf_helo_fallback = false;
    p.forward_adds_dkim = ForwardDkim::always;
    p.render_bidi = true;
    add(p);
  }
  {
    auto p = lenient("icloud-like");
    p.multiple_from = MultipleFrom::use_first;
    p.display_from = DisplayFrom::last;
    p.decode_encoded_word_for_auth = false;
    p.idn_display = IdnDisplay::unicode;
    p.forward_requires_auth = false;
    add(p);
  }
  {
    auto p = lenient("qq-like");
    p.multiple_from = MultipleFrom::use_last;
    p.display_from = DisplayFrom::first;
    p.sic_enabled = true;
    p.shown_alerts = {Alert::sic, Alert::multiple_from};
    p.render_bidi = true;
    add(p);
  }
  {
    auto p = lenient("gmail-like");
    p.sic_enabled = true;
    p.shown_alerts = {Alert::sic};
    p.idn_display = IdnDisplay::unicode;
    p.reject_on_spf_fail = true;
    p.arc_seal_on_forward = true;
    add(p);
  }
  {
    auto p = lenient("thunderbird-like");
    p.truncation = {TruncationCause::nul, TruncationCause::invisible_unicode,
                    TruncationCause::semantic_char};
    p.render_bidi = true;
    add(p);
  }
  {
    auto p = lenient("outlook-like");
    p.decode_encoded_word_for_auth = false;
    p.decode_encoded_word_for_display = true;
    p.render_bidi = true;
    p.forward_requires_auth = false;
    add(p);
  }
  {
    auto p = lenient("netease-like");
    p.sic_enabled = true;
    p.shown_alerts = {Alert::sic};
    p.display_drop_chars = {U'@', U':', U';', U'"'};
    p.idn_display = IdnDisplay::unicode;
    p.render_bidi = true;
    p.forward_requires_auth = false;
    add(p);
  }
  {
    auto p = lenient("aliyun-like");
    p.spf_helo_fallback = false;
    p.forward_adds_dkim = ForwardDkim::always;
    p.forward_requires_auth = true;
    add(p);
  }
  {
    auto p = lenient("office365-like");
    p.forward_requires_auth = false;
    p.forward_adds_dkim = ForwardDkim::always;
    p.arc_seal_on_forward = true;
    p.arc_falsify_dmarc = true;
    p.sic_enabled = true;
    p.shown_alerts = {Alert::sic};
    add(p);
  }
  {
    auto p = lenient("zoho-like");
    p.sic_enabled = true;
    p.shown_alerts = {Alert::sic};
    p.trust_arc_pass = true;
    p.arc_seal_on_forward = true;
    p.display_drop_chars = {U'@', U':', U';', U'"'};
    add(p);
  }
  return m;
}

}  // namespace

const std::map<std::string, QuirkProfile>& builtin_profiles() {
  static const auto profiles = make_builtins();
  return profiles;
}

const QuirkProfile& strict_rfc_profile() { return builtin_profiles().at("strict-rfc"); }

const QuirkProfile& builtin_profile(std::string_view name) {
  const auto& m = builtin_profiles();
  auto it = m.find(std::string(name));
  if (it == m.end()) throw Error(ErrorCode::config, "unknown profile: " + std::string(name));
  return it->second;
}

}  // namespace spoofchain
