#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spoofchain/profile.hpp"

namespace spoofchain {

// An email as the SMTP envelope plus the RFC 5322 header block and body.
// `header_block` holds the raw header bytes, each field terminated by CRLF,
// without the blank separator line.
struct RawMessage {
  std::string helo_domain;
  std::optional<std::string> mail_from;  // nullopt is the empty reverse-path
  std::vector<std::string> rcpt_to;
  std::optional<std::string> auth_username;
  std::string header_block;
  std::string body;
  std::string client_ip;

  friend bool operator==(const RawMessage&, const RawMessage&) = default;
};

struct HeaderField {
  std::string name;      // normalized, case preserved
  std::string raw_name;  // exact bytes before the colon
  std::string raw_value; // bytes after the colon, folds included
  std::size_t ordinal = 0;

  friend bool operator==(const HeaderField&, const HeaderField&) = default;
};

struct Violation {
  std::string code;
  std::string detail;
  std::optional<std::size_t> ordinal;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct HeaderParse {
  std::vector<HeaderField> fields;
  std::vector<Violation> violations;

  std::vector<const HeaderField*> named(std::string_view name) const;
};

// Strict mode throws malformed_fold / illegal_field_name and reports
// duplicate From fields as a `multiple-from` violation. Lenient mode never
// throws; odd names are normalized (whitespace and invisible code points
// removed) and anything unusable is reported as a violation.
HeaderParse parse_header_block(std::string_view block, const QuirkProfile& profile);

std::string unfold(std::string_view value);
std::string serialize_fields(const std::vector<HeaderField>& fields);

// Headers, blank line, body. Header bytes are emitted verbatim; the body gets
// bare LF promoted to CRLF and a terminating CRLF.
std::string serialize_message(const RawMessage& msg);

// The body bytes serialize_message emits.
std::string wire_body(std::string_view body);

// Inverse of serialize_message for the content part; envelope fields are
// taken from `envelope` unchanged.
RawMessage parse_eml(std::string_view bytes, const RawMessage& envelope = {});

// Builds a header block from (name, value) pairs as `name: value` lines.
std::string make_header_block(const std::vector<std::pair<std::string, std::string>>& fields);
void prepend_header(RawMessage& msg, std::string_view name, std::string_view value);

struct ByteSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const ByteSpan&, const ByteSpan&) = default;
};

struct Truncation {
  std::size_t offset = 0;
  TruncationCause cause = TruncationCause::nul;
  friend bool operator==(const Truncation&, const Truncation&) = default;
};

struct Mailbox {
  std::optional<std::string> display_name;
  std::string local_part;
  std::string domain;
  std::vector<std::string> route;
  std::vector<std::string> comments;
  ByteSpan raw_span;
  std::optional<Truncation> truncated_at;
  // addr-spec text after route/comment removal and truncation, before the
  // lenient domain cut; what a renderer works from
  std::string raw_address;

  std::string address() const { return domain.empty() ? local_part : local_part + "@" + domain; }
  friend bool operator==(const Mailbox&, const Mailbox&) = default;
};

struct AddressList {
  std::vector<Mailbox> mailboxes;
  std::vector<Violation> violations;
};

// Throws reject_null_member when the profile rejects null members, and
// empty_result in strict mode when no mailbox survives. Lenient mode returns
// an empty list with an `empty-result` violation instead.
AddressList parse_address_list(std::string_view raw, const QuirkProfile& profile);

struct TruncationResult {
  std::string text;
  std::optional<TruncationCause> cause;
  std::size_t offset = 0;
};

// Cuts `text` at the first character matching an enabled truncation cause.
TruncationResult apply_truncation(std::string_view text, const QuirkProfile& profile);

struct DecodedText {
  std::string text;
  std::size_t decoded = 0;
  std::size_t failed = 0;
};

// RFC 2047 encoded-words (b and q; utf-8, us-ascii, iso-8859-1). Malformed
// words pass through verbatim and are counted in `failed`.
DecodedText decode_encoded_words_ex(std::string_view raw);
std::string decode_encoded_words(std::string_view raw);
std::string encode_word_b(std::string_view utf8_text);

enum class IdentityPurpose { auth, display };

// The From identity a given profile derives from a message: which mailbox an
// MTA authenticates, or which the MUA shows.
struct FromIdentity {
  std::size_t from_fields = 0;
  std::vector<Mailbox> mailboxes;  // flattened across From fields, in order
  std::optional<Mailbox> selected;
  bool rejected = false;
  std::string reason;
  std::vector<Violation> violations;
  std::vector<std::pair<std::string, std::string>> trace;

  std::string domain() const { return selected ? selected->domain : std::string{}; }
};

FromIdentity extract_from_identity(const HeaderParse& parse, const QuirkProfile& profile,
                                   IdentityPurpose purpose);
FromIdentity extract_from_identity(const RawMessage& msg, const QuirkProfile& profile,
                                   IdentityPurpose purpose);

// Everything strict parsing objects to, collected without throwing.
std::vector<Violation> structural_violations(const RawMessage& msg, const QuirkProfile& profile);

std::string address_domain(std::string_view address);
std::string address_local(std::string_view address);

}  // namespace spoofchain
