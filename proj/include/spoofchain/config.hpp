#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace spoofchain {

// `key = value` lines; blank lines and lines starting with '#' are skipped.
// Keys are returned in document order and may repeat.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

KeyValues parse_key_values(std::string_view document);
std::optional<std::string> find_value(const KeyValues& kv, std::string_view key);
bool parse_bool(std::string_view value);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

// Operator-facing harness settings. Missing optional keys keep these
// defaults; referenced paths must exist when the document names them.
struct HarnessConfig {
  std::filesystem::path profiles_dir;
  std::filesystem::path zone_file;
  std::filesystem::path key_dir;
  std::filesystem::path output_dir = "out";
  std::string default_scenario = "strict-rfc";
  std::optional<std::filesystem::path> target_config;
};

HarnessConfig load_harness_config(const std::filesystem::path& path);

}  // namespace spoofchain
