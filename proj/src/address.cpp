#include <algorithm>
#include <cctype>

#include "spoofchain/error.hpp"
#include "spoofchain/header_model.hpp"
#include "spoofchain/text.hpp"

namespace spoofchain {

namespace {

bool is_atext(unsigned char c) {
  return std::isalnum(c) || std::string_view("!#$%&'*+-/=?^_`{|}~").find(static_cast<char>(c)) !=
                                std::string_view::npos;
}

bool strict_local_ok(std::string_view local) {
  if (local.empty()) return false;
  if (local.size() >= 2 && local.front() == '"' && local.back() == '"') {
    for (std::size_t i = 1; i + 1 < local.size(); ++i) {
      auto c = static_cast<unsigned char>(local[i]);
      if (c == '\\') { ++i; continue; }
      if (c < 32 || c > 126 || c == '"') return false;
    }
    return true;
  }
  if (local.front() == '.' || local.back() == '.' || local.find("..") != std::string_view::npos) return false;
  return std::all_of(local.begin(), local.end(),
                     [](unsigned char c) { return c == '.' || is_atext(c); });
}

bool strict_domain_ok(std::string_view domain) {
  if (domain.empty()) return false;
  if (domain.front() == '[') {
    if (domain.back() != ']') return false;
    return std::all_of(domain.begin() + 1, domain.end() - 1, [](unsigned char c) {
      return c >= 33 && c <= 126 && c != '[' && c != ']' && c != '\\';
    });
  }
  for (const auto& label : text::split(domain, '.')) {
    if (label.empty() || label.front() == '-' || label.back() == '-') return false;
    if (!std::all_of(label.begin(), label.end(),
                     [](unsigned char c) { return std::isalnum(c) || c == '-'; })) {
      return false;
    }
  }
  return true;
}

bool is_bidi_control(char32_t cp) {
  return (cp >= 0x200E && cp <= 0x200F) || (cp >= 0x202A && cp <= 0x202E) ||
         (cp >= 0x2066 && cp <= 0x2069);
}

// Longest leading run of characters a lenient parser accepts in a domain.
std::string_view domain_run(std::string_view s, const QuirkProfile& profile) {
  std::size_t end = 0;
  for (const auto& u : text::decode_utf8(s)) {
    bool ok;
    if (u.raw) {
      ok = false;
    } else if (u.cp < 0x80) {
      auto c = static_cast<unsigned char>(u.cp);
      ok = std::isalnum(c) || c == '.' || c == '-' || c == '_' || c == '[' || c == ']';
    } else {
      ok = !profile.is_invisible(u.cp) && !is_bidi_control(u.cp) && u.cp != 0xFEFF &&
           !(u.cp >= 0x200B && u.cp <= 0x200D);
    }
    if (!ok) break;
    end = u.offset + u.length;
  }
  return s.substr(0, end);
}

std::string unquote(std::string_view s) {
  if (s.size() < 2 || s.front() != '"' || s.back() != '"') return std::string(s);
  std::string out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] == '\\' && i + 2 < s.size()) ++i;
    out += s[i];
  }
  return out;
}

std::size_t find_unquoted(std::string_view s, char target, std::size_t from = 0) {
  bool quoted = false;
  for (std::size_t i = from; i < s.size(); ++i) {
    if (s[i] == '\\' && quoted) { ++i; continue; }
    if (s[i] == '"') quoted = !quoted;
    else if (!quoted && s[i] == target) return i;
  }
  return std::string_view::npos;
}

std::size_t rfind_unquoted(std::string_view s, char target) {
  std::size_t found = std::string_view::npos;
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && quoted) { ++i; continue; }
    if (s[i] == '"') quoted = !quoted;
    else if (!quoted && s[i] == target) found = i;
  }
  return found;
}

std::size_t count_unquoted(std::string_view s, char target) {
  std::size_t n = 0;
  for (auto pos = find_unquoted(s, target); pos != std::string_view::npos;
       pos = find_unquoted(s, target, pos + 1)) {
    ++n;
  }
  return n;
}

bool comments_active(const QuirkProfile& profile) {
  return profile.strict() || profile.comment_handling == CommentHandling::strip;
}

// Splits an address list at top-level commas.
std::vector<ByteSpan> split_members(std::string_view raw, const QuirkProfile& profile) {
  std::vector<ByteSpan> spans;
  bool quoted = false;
  int paren = 0;
  int angle = 0;
  int square = 0;
  const bool comments = comments_active(profile);
  std::size_t start = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    char c = raw[i];
    if ((quoted || paren > 0) && c == '\\') { ++i; continue; }
    if (paren > 0) {
      if (c == '(') ++paren;
      else if (c == ')') --paren;
      continue;
    }
    if (quoted) {
      if (c == '"') quoted = false;
      continue;
    }
    switch (c) {
      case '"': quoted = true; break;
      case '(': if (comments) paren = 1; break;
      case '<': ++angle; break;
      case '>': if (angle > 0) --angle; break;
      case '[': ++square; break;
      case ']': if (square > 0) --square; break;
      case ',':
        if (angle == 0 && square == 0) {
          spans.push_back({start, i});
          start = i + 1;
        }
        break;
      default: break;
    }
  }
  spans.push_back({start, raw.size()});
  return spans;
}

struct MemberOutcome {
  std::optional<Mailbox> mailbox;
  bool null_member = false;
};

MemberOutcome parse_member(std::string_view raw, ByteSpan span, const QuirkProfile& profile,
                           std::vector<Violation>& violations) {
  const bool strict = profile.strict();
  auto member = raw.substr(span.begin, span.end - span.begin);
  auto note = [&](std::string code, std::string_view detail) {
    violations.push_back({std::move(code), text::escape(detail), std::nullopt});
  };

  Mailbox mb;
  mb.raw_span = span;

  std::string work;
  bool comment_in_angle = false;
  if (comments_active(profile)) {
    bool quoted = false;
    bool in_angle = false;
    for (std::size_t i = 0; i < member.size(); ++i) {
      char c = member[i];
      if (quoted) {
        work += c;
        if (c == '\\' && i + 1 < member.size()) work += member[++i];
        else if (c == '"') quoted = false;
        continue;
      }
      if (c == '"') { quoted = true; work += c; continue; }
      if (c == '<') in_angle = true;
      if (c == '>') in_angle = false;
      if (c != '(') { work += c; continue; }
      comment_in_angle = comment_in_angle || in_angle;
      int depth = 1;
      std::string comment;
      std::size_t j = i + 1;
      for (; j < member.size() && depth > 0; ++j) {
        char d = member[j];
        if (d == '\\' && j + 1 < member.size()) { comment += member[++j]; continue; }
        if (d == '(') ++depth;
        else if (d == ')' && --depth == 0) break;
        comment += d;
      }
      if (depth > 0) note("unclosed-comment", member.substr(i));
      mb.comments.push_back(comment);
      i = j;
    }
  } else {
    work = std::string(member);
  }

  auto trimmed = text::trim(work);
  if (trimmed.empty()) return {std::nullopt, true};
  // Legal CFWS, but no real client puts comments inside an address; a
  // strict parser treats it as an evasion attempt.
  if (strict && comment_in_angle) {
    note("comment-in-address", member);
    return {};
  }

  std::string_view addr;
  std::string_view display;
  if (auto lt = find_unquoted(trimmed, '<'); lt != std::string_view::npos) {
    display = trimmed.substr(0, lt);
    auto gt = trimmed.find('>', lt + 1);
    if (gt == std::string_view::npos) {
      note("unclosed-angle", trimmed);
      if (strict) return {};
      addr = trimmed.substr(lt + 1);
    } else {
      addr = trimmed.substr(lt + 1, gt - lt - 1);
      if (!text::trim(trimmed.substr(gt + 1)).empty()) {
        note("text-after-angle", trimmed.substr(gt + 1));
        if (strict) return {};
      }
    }
  } else if (trimmed.front() == '[' && trimmed.find(']') != std::string_view::npos) {
    note("bracket-as-angle", trimmed);
    if (strict) return {};
    addr = trimmed.substr(1, trimmed.find(']') - 1);
  } else {
    addr = trimmed;
  }

  auto addr_text = text::trim(addr);
  if (!addr_text.empty() && addr_text.front() == '@') {
    auto colon = addr_text.find(':');
    if (colon == std::string_view::npos) {
      note("bad-route", addr_text);
      return {};
    }
    for (const auto& hop : text::split(addr_text.substr(0, colon), ',')) {
      auto h = text::trim(hop);
      if (!h.empty() && h.front() == '@') h.remove_prefix(1);
      if (!h.empty()) mb.route.emplace_back(h);
    }
    if (profile.route_handling == RouteHandling::reject) {
      note("route", addr_text.substr(0, colon));
      return {};
    }
    if (strict) note("obsolete-route", addr_text.substr(0, colon));
    addr_text = text::trim(addr_text.substr(colon + 1));
  }

  std::string addr_owned(addr_text);
  if (!profile.truncation.empty()) {
    auto cut = apply_truncation(addr_owned, profile);
    if (cut.cause) {
      mb.truncated_at = Truncation{cut.offset, *cut.cause};
      addr_owned = cut.text;
    }
  }
  std::string_view spec = addr_owned;
  mb.raw_address = addr_owned;

  auto ats = count_unquoted(spec, '@');
  if (ats == 0) {
    note("missing-at", spec);
    return {};
  }
  if (ats > 1) {
    note("multiple-at", spec);
    if (strict) return {};
  }
  auto at = rfind_unquoted(spec, '@');
  auto local = text::trim(spec.substr(0, at));
  auto domain_raw = text::trim(spec.substr(at + 1));

  if (strict) {
    if (!strict_local_ok(local) || !strict_domain_ok(domain_raw)) {
      note("invalid-addr-spec", spec);
      return {};
    }
    mb.domain = std::string(domain_raw);
  } else {
    auto run = domain_run(domain_raw, profile);
    if (run.size() != domain_raw.size()) note("domain-trailing-text", domain_raw);
    mb.domain = std::string(run);
  }
  mb.local_part = std::string(local);

  if (!mb.route.empty() && profile.route_handling == RouteHandling::first_hop && !strict) {
    mb.domain = mb.route.front();
  }

  auto disp = text::trim(display);
  if (!disp.empty()) mb.display_name = unquote(disp);
  return {std::move(mb), false};
}

}  // namespace

TruncationResult apply_truncation(std::string_view input, const QuirkProfile& profile) {
  for (const auto& u : text::decode_utf8(input)) {
    std::optional<TruncationCause> cause;
    if (!u.raw && u.cp == 0 && profile.truncates(TruncationCause::nul)) {
      cause = TruncationCause::nul;
    } else if (!u.raw && profile.semantic_chars.contains(u.cp) &&
               profile.truncates(TruncationCause::semantic_char)) {
      cause = TruncationCause::semantic_char;
    } else if (profile.truncates(TruncationCause::invisible_unicode) &&
               (u.raw ? QuirkProfile::is_invisible_raw(static_cast<unsigned char>(u.cp))
                      : profile.is_invisible(u.cp))) {
      cause = TruncationCause::invisible_unicode;
    }
    if (cause) return {std::string(input.substr(0, u.offset)), cause, u.offset};
  }
  return {std::string(input), std::nullopt, input.size()};
}

AddressList parse_address_list(std::string_view raw, const QuirkProfile& profile) {
  AddressList out;
  for (const auto& span : split_members(raw, profile)) {
    auto outcome = parse_member(raw, span, profile, out.violations);
    if (outcome.null_member) {
      if (profile.null_list_members == NullMembers::reject) {
        throw Error(ErrorCode::reject_null_member,
                    "null member at offset " + std::to_string(span.begin));
      }
      out.violations.push_back({"null-member", "offset " + std::to_string(span.begin), std::nullopt});
      continue;
    }
    if (outcome.mailbox) out.mailboxes.push_back(std::move(*outcome.mailbox));
  }
  if (out.mailboxes.empty()) {
    if (profile.strict()) throw Error(ErrorCode::empty_result, "no parsable mailbox in " + text::escape(raw));
    out.violations.push_back({"empty-result", text::escape(raw), std::nullopt});
  }
  return out;
}

namespace {

std::optional<std::string> decode_q(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '_') {
      out += ' ';
    } else if (s[i] == '=') {
      if (i + 2 >= s.size() || !std::isxdigit(static_cast<unsigned char>(s[i + 1])) ||
          !std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
        return std::nullopt;
      }
      out += static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

std::optional<std::string> to_utf8(std::string_view charset, std::string bytes) {
  auto cs = text::to_lower(charset.substr(0, charset.find('*')));
  if (cs == "utf-8" || cs == "utf8" || cs == "us-ascii" || cs == "ascii") return bytes;
  if (cs == "iso-8859-1" || cs == "latin1" || cs == "iso8859-1") {
    std::string out;
    for (unsigned char c : bytes) text::append_utf8(out, c);
    return out;
  }
  return std::nullopt;
}

}  // namespace

DecodedText decode_encoded_words_ex(std::string_view raw) {
  DecodedText result;
  std::string pending_ws;
  bool last_encoded = false;
  std::size_t i = 0;
  auto flush_literal = [&](std::string_view s) {
    result.text += pending_ws;
    pending_ws.clear();
    result.text += s;
    last_encoded = false;
  };
  while (i < raw.size()) {
    if (raw.compare(i, 2, "=?") == 0) {
      auto q1 = raw.find('?', i + 2);
      auto q2 = q1 == std::string_view::npos ? q1 : raw.find('?', q1 + 1);
      auto end = q2 == std::string_view::npos ? q2 : raw.find("?=", q2 + 1);
      if (end != std::string_view::npos && q2 == q1 + 2) {
        auto charset = raw.substr(i + 2, q1 - i - 2);
        char enc = static_cast<char>(std::tolower(static_cast<unsigned char>(raw[q1 + 1])));
        auto payload = raw.substr(q2 + 1, end - q2 - 1);
        std::optional<std::string> bytes;
        if (payload.find(' ') == std::string_view::npos && !charset.empty()) {
          if (enc == 'b') bytes = text::base64_decode(payload);
          else if (enc == 'q') bytes = decode_q(payload);
        }
        std::optional<std::string> decoded;
        if (bytes) decoded = to_utf8(charset, std::move(*bytes));
        if (decoded) {
          if (!last_encoded) result.text += pending_ws;
          pending_ws.clear();
          result.text += *decoded;
          ++result.decoded;
          last_encoded = true;
          i = end + 2;
          continue;
        }
        ++result.failed;
        flush_literal(raw.substr(i, end + 2 - i));
        i = end + 2;
        continue;
      }
    }
    char c = raw[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      pending_ws += c;
    } else {
      flush_literal(std::string_view(&raw[i], 1));
    }
    ++i;
  }
  result.text += pending_ws;
  return result;
}

std::string decode_encoded_words(std::string_view raw) { return decode_encoded_words_ex(raw).text; }

std::string encode_word_b(std::string_view utf8_text) {
  return "=?utf-8?b?" + text::base64_encode(utf8_text) + "?=";
}

FromIdentity extract_from_identity(const HeaderParse& parse, const QuirkProfile& profile,
                                   IdentityPurpose purpose) {
  FromIdentity id;
  id.violations = parse.violations;
  const bool decode = purpose == IdentityPurpose::auth ? profile.decode_encoded_word_for_auth
                                                       : profile.decode_encoded_word_for_display;
  auto froms = parse.named("From");
  id.from_fields = froms.size();
  for (const auto* field : froms) {
    auto value = unfold(field->raw_value);
    id.trace.emplace_back("from[" + std::to_string(field->ordinal) + "]", text::escape(value));
    if (decode) {
      auto decoded = decode_encoded_words_ex(value);
      if (decoded.decoded > 0) id.trace.emplace_back("decode", text::escape(decoded.text));
      value = std::move(decoded.text);
    }
    try {
      auto list = parse_address_list(value, profile);
      for (auto& v : list.violations) id.violations.push_back(std::move(v));
      for (auto& mb : list.mailboxes) {
        if (mb.truncated_at) {
          id.trace.emplace_back(std::string("truncate:") + std::string(to_string(mb.truncated_at->cause)),
                                text::escape(mb.address()));
        }
        id.mailboxes.push_back(std::move(mb));
      }
    } catch (const Error& e) {
      id.violations.push_back({std::string(to_string(e.code())), e.what(), field->ordinal});
      id.rejected = true;
      id.reason = std::string(to_string(e.code()));
    }
  }
  if (froms.empty()) {
    id.violations.push_back({"no-from", "message has no From field", std::nullopt});
    if (profile.strict()) {
      id.rejected = true;
      id.reason = "no-from";
    }
  }
  const auto n = id.mailboxes.size();
  if (profile.strict() && n > 1 && parse.named("Sender").empty()) {
    id.violations.push_back({"multi-mailbox-without-sender", std::to_string(n) + " mailboxes", std::nullopt});
  }
  if (profile.strict() && !id.rejected && !id.violations.empty()) {
    id.rejected = true;
    id.reason = id.violations.front().code;
  }
  if (purpose == IdentityPurpose::auth && n > 1 && profile.multiple_from == MultipleFrom::reject &&
      !id.rejected) {
    id.rejected = true;
    id.reason = "multiple-from";
  }
  if (id.rejected || n == 0) {
    id.trace.emplace_back("select", id.rejected ? "rejected: " + id.reason : "none");
    return id;
  }
  bool last;
  if (purpose == IdentityPurpose::auth) {
    last = profile.multiple_from == MultipleFrom::use_last;
  } else {
    last = profile.display_from == DisplayFrom::last;
  }
  id.selected = last ? id.mailboxes.back() : id.mailboxes.front();
  id.trace.emplace_back("select", text::escape(id.selected->address()));
  return id;
}

FromIdentity extract_from_identity(const RawMessage& msg, const QuirkProfile& profile,
                                   IdentityPurpose purpose) {
  try {
    return extract_from_identity(parse_header_block(msg.header_block, profile), profile, purpose);
  } catch (const Error& e) {
    FromIdentity id;
    id.rejected = true;
    id.reason = std::string(to_string(e.code()));
    id.violations.push_back({id.reason, e.what(), std::nullopt});
    id.trace.emplace_back("header-parse", id.reason);
    return id;
  }
}

std::vector<Violation> structural_violations(const RawMessage& msg, const QuirkProfile& profile) {
  auto id = extract_from_identity(msg, profile, IdentityPurpose::auth);
  return id.violations;
}

}  // namespace spoofchain
