#include "spoofchain/config.hpp"

#include <fstream>
#include <sstream>

#include "spoofchain/error.hpp"
#include "spoofchain/text.hpp"

namespace spoofchain {

KeyValues parse_key_values(std::string_view document) {
  KeyValues out;
  std::size_t line_no = 0;
  for (const auto& raw : text::split(document, '\n')) {
    ++line_no;
    auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::config, "line " + std::to_string(line_no) + ": expected key = value");
    }
    out.emplace_back(std::string(text::trim(line.substr(0, eq))),
                     std::string(text::trim(line.substr(eq + 1))));
  }
  return out;
}

std::optional<std::string> find_value(const KeyValues& kv, std::string_view key) {
  for (auto it = kv.rbegin(); it != kv.rend(); ++it) {
    if (it->first == key) return it->second;
  }
  return std::nullopt;
}

bool parse_bool(std::string_view value) {
  auto v = text::to_lower(value);
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw Error(ErrorCode::config, "not a boolean: " + std::string(value));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

HarnessConfig load_harness_config(const std::filesystem::path& path) {
  auto kv = parse_key_values(read_file(path));
  HarnessConfig cfg;
  // Relative paths are taken from the working directory, like flags.
  auto resolve = [](const std::string& v) { return std::filesystem::path(v); };
  auto existing = [&](std::string_view key) -> std::optional<std::filesystem::path> {
    auto v = find_value(kv, key);
    if (!v) return std::nullopt;
    auto p = resolve(*v);
    if (!std::filesystem::exists(p)) {
      throw Error(ErrorCode::config, std::string(key) + " does not exist: " + p.string());
    }
    return p;
  };
  for (const auto& [key, value] : kv) {
    if (key != "profiles_dir" && key != "zone_file" && key != "key_dir" && key != "output_dir" &&
        key != "default_scenario" && key != "target_config") {
      throw Error(ErrorCode::config, "unknown key: " + key);
    }
  }
  if (auto p = existing("profiles_dir")) cfg.profiles_dir = *p;
  if (auto p = existing("zone_file")) cfg.zone_file = *p;
  if (auto p = existing("key_dir")) cfg.key_dir = *p;
  if (auto p = existing("target_config")) cfg.target_config = *p;
  if (auto v = find_value(kv, "output_dir")) cfg.output_dir = resolve(*v);
  if (auto v = find_value(kv, "default_scenario")) cfg.default_scenario = *v;
  return cfg;
}

}  // namespace spoofchain
