#include <algorithm>

#include "spoofchain/error.hpp"
#include "spoofchain/header_model.hpp"
#include "spoofchain/text.hpp"

namespace spoofchain {

namespace {

bool is_wsp(char c) { return c == ' ' || c == '\t'; }

bool strict_name_ok(std::string_view name) {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](unsigned char c) {
    return c >= 33 && c <= 126 && c != ':';
  });
}

std::string normalize_name(std::string_view raw, const QuirkProfile& profile) {
  std::string out;
  for (const auto& u : text::decode_utf8(raw)) {
    if (u.raw) {
      if (QuirkProfile::is_invisible_raw(static_cast<unsigned char>(u.cp))) continue;
    } else if (u.cp == ' ' || u.cp == '\t' || profile.is_invisible(u.cp) || u.cp == 0xFEFF ||
               (u.cp >= 0x200B && u.cp <= 0x200D)) {
      continue;
    }
    out.append(raw.substr(u.offset, u.length));
  }
  return out;
}

struct Line {
  std::string_view text;
  bool bare_lf;
};

std::vector<Line> split_lines(std::string_view block) {
  std::vector<Line> lines;
  std::size_t pos = 0;
  while (pos < block.size()) {
    auto nl = block.find('\n', pos);
    if (nl == std::string_view::npos) {
      lines.push_back({block.substr(pos), false});
      break;
    }
    bool crlf = nl > pos && block[nl - 1] == '\r';
    lines.push_back({block.substr(pos, nl - pos - (crlf ? 1 : 0)), !crlf});
    pos = nl + 1;
  }
  return lines;
}

}  // namespace

std::vector<const HeaderField*> HeaderParse::named(std::string_view name) const {
  std::vector<const HeaderField*> out;
  for (const auto& f : fields) {
    if (text::iequals(f.name, name)) out.push_back(&f);
  }
  return out;
}

HeaderParse parse_header_block(std::string_view block, const QuirkProfile& profile) {
  const bool strict = profile.strict();
  HeaderParse result;
  for (const auto& line : split_lines(block)) {
    if (line.text.empty()) break;  // end of header section
    if (line.bare_lf) {
      result.violations.push_back({"bare-lf", "line ends with LF only", std::nullopt});
    }
    if (is_wsp(line.text.front())) {
      if (result.fields.empty()) {
        if (strict) throw Error(ErrorCode::malformed_fold, "continuation line before any field");
        result.violations.push_back({"malformed-fold", "continuation line before any field", std::nullopt});
        continue;
      }
      result.fields.back().raw_value += "\r\n";
      result.fields.back().raw_value += line.text;
      continue;
    }
    auto colon = line.text.find(':');
    if (colon == std::string_view::npos) {
      if (strict) throw Error(ErrorCode::illegal_field_name, "line without colon: " + text::escape(line.text));
      result.violations.push_back({"missing-colon", text::escape(line.text), std::nullopt});
      continue;
    }
    auto raw_name = line.text.substr(0, colon);
    HeaderField field;
    field.raw_name = std::string(raw_name);
    field.raw_value = std::string(line.text.substr(colon + 1));
    field.ordinal = result.fields.size();
    if (strict) {
      if (!strict_name_ok(raw_name)) {
        throw Error(ErrorCode::illegal_field_name, "'" + text::escape(raw_name) + "'");
      }
      field.name = field.raw_name;
    } else {
      field.name = normalize_name(raw_name, profile);
      if (field.name.empty()) {
        result.violations.push_back({"illegal-field-name", text::escape(raw_name), field.ordinal});
        continue;
      }
      if (field.name != field.raw_name) {
        result.violations.push_back({"normalized-field-name", text::escape(raw_name), field.ordinal});
      }
    }
    result.fields.push_back(std::move(field));
  }
  if (strict) {
    auto froms = result.named("From");
    if (froms.size() > 1) {
      result.violations.push_back(
          {"multiple-from", std::to_string(froms.size()) + " From fields", froms[1]->ordinal});
    }
  }
  return result;
}

std::string unfold(std::string_view value) {
  std::string out;
  out.reserve(value.size());
  for (std::size_t i = 0; i < value.size(); ++i) {
    if (value[i] == '\r' && i + 2 < value.size() && value[i + 1] == '\n' && is_wsp(value[i + 2])) {
      ++i;
      continue;
    }
    if (value[i] == '\n' && i + 1 < value.size() && is_wsp(value[i + 1])) continue;
    out += value[i];
  }
  return out;
}

std::string serialize_fields(const std::vector<HeaderField>& fields) {
  std::string out;
  for (const auto& f : fields) {
    out += f.raw_name;
    out += ':';
    out += f.raw_value;
    out += text::crlf;
  }
  return out;
}

std::string wire_body(std::string_view body) {
  std::string out;
  for (std::size_t i = 0; i < body.size(); ++i) {
    char c = body[i];
    if (c == '\n' && (i == 0 || body[i - 1] != '\r')) out += '\r';
    out += c;
  }
  if (!out.empty() && !out.ends_with("\r\n")) out += text::crlf;
  return out;
}

std::string serialize_message(const RawMessage& msg) {
  std::string out = msg.header_block;
  if (!out.empty() && !out.ends_with("\r\n")) out += text::crlf;
  out += text::crlf;
  out += wire_body(msg.body);
  return out;
}

RawMessage parse_eml(std::string_view bytes, const RawMessage& envelope) {
  RawMessage msg = envelope;
  std::size_t split = std::string_view::npos;
  std::size_t body_start = 0;
  if (bytes.starts_with("\r\n")) {
    split = 0;
    body_start = 2;
  } else if (auto p = bytes.find("\r\n\r\n"); p != std::string_view::npos) {
    split = p + 2;
    body_start = p + 4;
  } else if (auto q = bytes.find("\n\n"); q != std::string_view::npos) {
    split = q + 1;
    body_start = q + 2;
  }
  if (split == std::string_view::npos) {
    msg.header_block = std::string(bytes);
    msg.body.clear();
  } else {
    msg.header_block = std::string(bytes.substr(0, split));
    msg.body = std::string(bytes.substr(body_start));
  }
  return msg;
}

std::string make_header_block(const std::vector<std::pair<std::string, std::string>>& fields) {
  std::string out;
  for (const auto& [name, value] : fields) {
    out += name;
    out += ": ";
    out += value;
    out += text::crlf;
  }
  return out;
}

void prepend_header(RawMessage& msg, std::string_view name, std::string_view value) {
  std::string line(name);
  line += ": ";
  line += value;
  line += text::crlf;
  msg.header_block.insert(0, line);
}

std::string address_domain(std::string_view address) {
  auto at = address.rfind('@');
  return at == std::string_view::npos ? std::string{} : std::string(address.substr(at + 1));
}

std::string address_local(std::string_view address) {
  auto at = address.rfind('@');
  return std::string(at == std::string_view::npos ? address : address.substr(0, at));
}

}  // namespace spoofchain
