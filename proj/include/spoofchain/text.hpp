#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spoofchain::text {

inline constexpr std::string_view crlf = "\r\n";

std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
std::string_view trim(std::string_view s, std::string_view chars = " \t\r\n");
std::vector<std::string> split(std::string_view s, char sep);
bool starts_with_ci(std::string_view s, std::string_view prefix);

// One decoded unit of a byte string. Bytes that do not form valid UTF-8
// come back one at a time with `raw` set and `cp` equal to the byte value.
struct CodeUnit {
  char32_t cp;
  std::size_t offset;
  std::size_t length;
  bool raw;
};

std::vector<CodeUnit> decode_utf8(std::string_view s);
void append_utf8(std::string& out, char32_t cp);
std::string utf8(char32_t cp);

std::string base64_encode(std::string_view bytes);
// Returns nullopt on characters outside the base64 alphabet or bad padding.
std::optional<std::string> base64_decode(std::string_view b64);

std::string sha256(std::string_view bytes);

// Printable rendering of arbitrary bytes (\xNN, \uNNNN for controls).
std::string escape(std::string_view s);

}  // namespace spoofchain::text
