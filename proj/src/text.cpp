#include "spoofchain/text.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <algorithm>
#include <cctype>
#include <cstdio>

#include "spoofchain/error.hpp"

namespace spoofchain {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::malformed_fold: return "malformed-fold";
    case ErrorCode::illegal_field_name: return "illegal-field-name";
    case ErrorCode::empty_result: return "empty-result";
    case ErrorCode::reject_null_member: return "reject-null-member";
    case ErrorCode::unsupported_knob: return "unsupported-knob";
    case ErrorCode::locus_not_found: return "locus-not-found";
    case ErrorCode::incompatible_combination: return "incompatible-combination";
    case ErrorCode::missing_from_header: return "missing-from-header";
    case ErrorCode::domain_is_suffix: return "domain-is-suffix";
    case ErrorCode::instance_gap: return "instance-gap";
    case ErrorCode::bad_key: return "bad-key";
    case ErrorCode::no_forward_target: return "no-forward-target";
    case ErrorCode::scenario_incomplete: return "scenario-incomplete";
    case ErrorCode::consent_required: return "consent-required";
    case ErrorCode::rate_limited: return "rate-limited";
    case ErrorCode::connection_failed: return "connection-failed";
    case ErrorCode::rejected: return "rejected";
    case ErrorCode::append_rejected: return "append-rejected";
    case ErrorCode::precondition: return "precondition";
    case ErrorCode::config: return "config";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

namespace text {

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
           return std::tolower(x) == std::tolower(y);
         });
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && iequals(s.substr(0, prefix.size()), prefix);
}

std::string_view trim(std::string_view s, std::string_view chars) {
  auto b = s.find_first_not_of(chars);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(chars);
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<CodeUnit> decode_utf8(std::string_view s) {
  std::vector<CodeUnit> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0 && b0 >= 0xC2) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0 && b0 <= 0xF4) {
      len = 4;
      cp = b0 & 0x07;
    }
    bool ok = len > 0 && i + len <= s.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (b & 0x3F);
    }
    if (ok && len == 3 && (cp < 0x800 || (cp >= 0xD800 && cp <= 0xDFFF))) ok = false;
    if (ok && len == 4 && (cp < 0x10000 || cp > 0x10FFFF)) ok = false;
    if (ok) {
      out.push_back({cp, i, len, false});
      i += len;
    } else {
      out.push_back({b0, i, 1, true});
      ++i;
    }
  }
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

std::string utf8(char32_t cp) {
  std::string s;
  append_utf8(s, cp);
  return s;
}

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(bytes.data()),
                          static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::optional<std::string> base64_decode(std::string_view b64) {
  std::string clean;
  clean.reserve(b64.size());
  for (char c : b64) {
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') continue;
    clean += c;
  }
  if (clean.empty()) return std::string{};
  // EVP_DecodeBlock wants a multiple of four; tolerate missing padding.
  while (clean.size() % 4 != 0) clean += '=';
  std::size_t pad = 0;
  if (clean.ends_with("==")) pad = 2;
  else if (clean.ends_with("=")) pad = 1;
  if (clean.find('=') < clean.size() - pad) return std::nullopt;
  std::string out(clean.size() / 4 * 3, '\0');
  int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(clean.data()),
                          static_cast<int>(clean.size()));
  if (n < 0) return std::nullopt;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

std::string sha256(std::string_view bytes) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), digest);
  return std::string(reinterpret_cast<char*>(digest), sizeof digest);
}

std::string escape(std::string_view s) {
  std::string out;
  char buf[16];
  for (const auto& u : decode_utf8(s)) {
    if (u.raw) {
      std::snprintf(buf, sizeof buf, "\\x%02X", static_cast<unsigned>(u.cp));
      out += buf;
    } else if (u.cp == '\\') {
      out += "\\\\";
    } else if (u.cp < 0x20 || u.cp == 0x7F) {
      std::snprintf(buf, sizeof buf, "\\x%02X", static_cast<unsigned>(u.cp));
      out += buf;
    } else if ((u.cp >= 0x200B && u.cp <= 0x200F) || (u.cp >= 0x202A && u.cp <= 0x202E) ||
               (u.cp >= 0x2066 && u.cp <= 0x2069) || u.cp == 0xFEFF ||
               (u.cp >= 0xFFF0 && u.cp <= 0xFFFF)) {
      std::snprintf(buf, sizeof buf, "\\u%04X", static_cast<unsigned>(u.cp));
      out += buf;
    } else {
      out.append(s.substr(u.offset, u.length));
    }
  }
  return out;
}

}  // namespace text
}  // namespace spoofchain
