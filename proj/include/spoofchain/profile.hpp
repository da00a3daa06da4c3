#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace spoofchain {

enum class ParseMode { strict, lenient };
enum class MultipleFrom { reject, use_first, use_last, show_all };
enum class DisplayFrom { first, last, all };
enum class TruncationCause { nul, invisible_unicode, semantic_char };
enum class NullMembers { reject, skip };
enum class RouteHandling { strip, reject, first_hop };
enum class CommentHandling { strip, literal };
enum class ForwardDkim { never, always, only_if_verified };
enum class IdnDisplay { unicode, ascii };
enum class FromCheck { none, first_from, membership, exact };
enum class Alert { sic, homograph, rtl_override, invisible_chars, multiple_from };

struct CodepointRange {
  char32_t lo;
  char32_t hi;
  bool contains(char32_t cp) const { return lo <= cp && cp <= hi; }
  friend bool operator==(const CodepointRange&, const CodepointRange&) = default;
};

// A named bundle of parsing, verification, forwarding and rendering
// decisions. Profiles are plain values; the same message evaluated under the
// same profile always yields the same result.
struct QuirkProfile {
  std::string name = "unnamed";
  ParseMode parse_mode = ParseMode::lenient;

  // identity extraction
  MultipleFrom multiple_from = MultipleFrom::use_first;
  DisplayFrom display_from = DisplayFrom::first;
  bool decode_encoded_word_for_display = true;
  bool decode_encoded_word_for_auth = true;
  std::set<TruncationCause> truncation;
  std::vector<CodepointRange> invisible_ranges = default_invisible_ranges();
  std::set<char32_t> semantic_chars = default_semantic_chars();
  NullMembers null_list_members = NullMembers::skip;
  RouteHandling route_handling = RouteHandling::strip;
  CommentHandling comment_handling = CommentHandling::strip;

  // sending
  bool check_auth_matches_mail_from = true;
  FromCheck from_check = FromCheck::exact;

  // receiving
  bool spf_helo_fallback = true;
  bool dmarc_org_fallback = true;
  bool reject_on_spf_fail = false;
  bool trust_arc_pass = false;

  // forwarding
  ForwardDkim forward_adds_dkim = ForwardDkim::only_if_verified;
  bool forward_requires_auth = true;
  bool arc_seal_on_forward = false;
  bool arc_falsify_dmarc = false;

  // rendering
  bool sic_enabled = false;
  std::set<Alert> shown_alerts;
  std::set<char32_t> display_drop_chars;
  IdnDisplay idn_display = IdnDisplay::ascii;
  bool render_bidi = false;

  bool strict() const { return parse_mode == ParseMode::strict; }
  bool truncates(TruncationCause c) const { return truncation.contains(c); }
  bool is_invisible(char32_t cp) const;
  // Bytes 0x81-0xFF outside a valid UTF-8 sequence.
  static bool is_invisible_raw(unsigned char byte) { return byte >= 0x81; }

  static std::vector<CodepointRange> default_invisible_ranges();
  static std::set<char32_t> default_semantic_chars();

  friend bool operator==(const QuirkProfile&, const QuirkProfile&) = default;
};

std::string_view to_string(ParseMode v);
std::string_view to_string(MultipleFrom v);
std::string_view to_string(DisplayFrom v);
std::string_view to_string(TruncationCause v);
std::string_view to_string(NullMembers v);
std::string_view to_string(RouteHandling v);
std::string_view to_string(CommentHandling v);
std::string_view to_string(ForwardDkim v);
std::string_view to_string(IdnDisplay v);
std::string_view to_string(FromCheck v);
std::string_view to_string(Alert v);

Alert parse_alert(std::string_view s);

// Flat `key = value` document, one profile per file. Unknown keys and
// out-of-range enum values are config errors.
QuirkProfile parse_profile(std::string_view document);
std::string format_profile(const QuirkProfile& profile);

// Shipped fixtures. Vendor-like names are labeled approximations of the
// behaviors reported for those services, not claims about them.
const QuirkProfile& strict_rfc_profile();
const std::map<std::string, QuirkProfile>& builtin_profiles();
const QuirkProfile& builtin_profile(std::string_view name);

}  // namespace spoofchain
