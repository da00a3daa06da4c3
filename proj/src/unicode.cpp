#include "spoofchain/unicode.hpp"

#include <unicode/ucasemap.h>
#include <unicode/uidna.h>
#include <unicode/uscript.h>
#include <unicode/uspoof.h>

#include <map>
#include <memory>
#include <variant>
#include <vector>

#include "spoofchain/text.hpp"

namespace spoofchain::unicode {

namespace {

struct IdnaClose {
  void operator()(UIDNA* p) const { uidna_close(p); }
};
struct SpoofClose {
  void operator()(USpoofChecker* p) const { uspoof_close(p); }
};
struct CaseMapClose {
  void operator()(UCaseMap* p) const { ucasemap_close(p); }
};

std::string idna_convert(std::string_view domain, bool to_unicode) {
  UErrorCode status = U_ZERO_ERROR;
  std::unique_ptr<UIDNA, IdnaClose> idna(
      uidna_openUTS46(UIDNA_NONTRANSITIONAL_TO_ASCII | UIDNA_NONTRANSITIONAL_TO_UNICODE, &status));
  if (U_FAILURE(status)) return std::string(domain);
  std::string out(domain.size() * 4 + 64, '\0');
  UIDNAInfo info = UIDNA_INFO_INITIALIZER;
  int32_t len = to_unicode
                    ? uidna_nameToUnicodeUTF8(idna.get(), domain.data(), static_cast<int32_t>(domain.size()),
                                              out.data(), static_cast<int32_t>(out.size()), &info, &status)
                    : uidna_nameToASCII_UTF8(idna.get(), domain.data(), static_cast<int32_t>(domain.size()),
                                             out.data(), static_cast<int32_t>(out.size()), &info, &status);
  if (U_FAILURE(status) || info.errors != 0) return std::string(domain);
  out.resize(static_cast<std::size_t>(len));
  return out;
}

bool is_zero_width(char32_t cp) { return (cp >= 0x200B && cp <= 0x200D) || cp == 0x2060 || cp == 0xFEFF; }

std::string fold_case(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  std::unique_ptr<UCaseMap, CaseMapClose> map(ucasemap_open("", U_FOLD_CASE_DEFAULT, &status));
  if (U_FAILURE(status)) return text::to_lower(s);
  std::string out(s.size() * 3 + 16, '\0');
  int32_t len = ucasemap_utf8FoldCase(map.get(), out.data(), static_cast<int32_t>(out.size()), s.data(),
                                      static_cast<int32_t>(s.size()), &status);
  if (U_FAILURE(status)) return text::to_lower(s);
  out.resize(static_cast<std::size_t>(len));
  return out;
}

}  // namespace

std::string idn_to_unicode(std::string_view domain) { return idna_convert(domain, true); }
std::string idn_to_ascii(std::string_view domain) { return idna_convert(domain, false); }

bool is_bidi_control(char32_t cp) {
  return (cp >= 0x202A && cp <= 0x202E) || (cp >= 0x2066 && cp <= 0x2069);
}

bool has_bidi_controls(std::string_view s) {
  for (const auto& u : text::decode_utf8(s)) {
    if (!u.raw && is_bidi_control(u.cp)) return true;
  }
  return false;
}

std::string strip_format(std::string_view s) {
  std::string out;
  for (const auto& u : text::decode_utf8(s)) {
    if (!u.raw && (is_bidi_control(u.cp) || is_zero_width(u.cp) || u.cp == 0x200E || u.cp == 0x200F)) continue;
    out += s.substr(u.offset, u.length);
  }
  return out;
}

std::string skeleton(std::string_view s) {
  auto folded = fold_case(strip_format(s));
  UErrorCode status = U_ZERO_ERROR;
  std::unique_ptr<USpoofChecker, SpoofClose> sc(uspoof_open(&status));
  if (U_FAILURE(status)) return folded;
  std::string out(folded.size() * 4 + 16, '\0');
  int32_t len = uspoof_getSkeletonUTF8(sc.get(), 0, folded.data(), static_cast<int32_t>(folded.size()), out.data(),
                                       static_cast<int32_t>(out.size()), &status);
  if (status == U_BUFFER_OVERFLOW_ERROR) {
    status = U_ZERO_ERROR;
    out.resize(static_cast<std::size_t>(len) + 1);
    len = uspoof_getSkeletonUTF8(sc.get(), 0, folded.data(), static_cast<int32_t>(folded.size()), out.data(),
                                 static_cast<int32_t>(out.size()), &status);
  }
  if (U_FAILURE(status)) return folded;
  out.resize(static_cast<std::size_t>(len));
  // skeletons are not case-stable; fold again so `A` and `a` agree
  return fold_case(out);
}

bool confusable(std::string_view a, std::string_view b) { return skeleton(a) == skeleton(b); }

bool mixed_script(std::string_view label) {
  std::optional<UScriptCode> seen;
  for (const auto& u : text::decode_utf8(label)) {
    if (u.raw) continue;
    UErrorCode status = U_ZERO_ERROR;
    auto script = uscript_getScript(static_cast<UChar32>(u.cp), &status);
    if (U_FAILURE(status) || script == USCRIPT_COMMON || script == USCRIPT_INHERITED ||
        script == USCRIPT_UNKNOWN) {
      continue;
    }
    if (seen && *seen != script) return true;
    seen = script;
  }
  return false;
}

namespace {

struct Run {
  bool rtl = false;
  std::vector<std::variant<std::string, std::unique_ptr<Run>>> units;
};

void emit(const Run& run, std::string& out) {
  auto put = [&](const auto& unit) {
    if (std::holds_alternative<std::string>(unit)) out += std::get<std::string>(unit);
    else emit(*std::get<std::unique_ptr<Run>>(unit), out);
  };
  if (run.rtl) {
    for (auto it = run.units.rbegin(); it != run.units.rend(); ++it) put(*it);
  } else {
    for (const auto& u : run.units) put(u);
  }
}

}  // namespace

std::string bidi_visual(std::string_view s) {
  Run root;
  std::vector<Run*> stack{&root};
  for (const auto& u : text::decode_utf8(s)) {
    if (!u.raw && is_bidi_control(u.cp)) {
      if (u.cp == 0x202C || u.cp == 0x2069) {
        if (stack.size() > 1) stack.pop_back();
        continue;
      }
      auto run = std::make_unique<Run>();
      run->rtl = u.cp == 0x202B || u.cp == 0x202E || u.cp == 0x2067;
      Run* raw = run.get();
      stack.back()->units.emplace_back(std::move(run));
      stack.push_back(raw);
      continue;
    }
    if (!u.raw && (u.cp == 0x200E || u.cp == 0x200F)) continue;
    stack.back()->units.emplace_back(std::string(s.substr(u.offset, u.length)));
  }
  std::string out;
  emit(root, out);
  return out;
}

std::optional<std::string> substitute_confusable(std::string_view label) {
  static const std::map<char, char32_t> table = {
      {'a', 0x0430}, {'c', 0x0441}, {'e', 0x0435}, {'o', 0x043E}, {'p', 0x0440}, {'x', 0x0445},
      {'y', 0x0443}, {'i', 0x0456}, {'j', 0x0458}, {'s', 0x0455}, {'h', 0x04BB}, {'v', 0x03BD},
  };
  for (std::size_t i = 0; i < label.size(); ++i) {
    auto it = table.find(label[i]);
    if (it == table.end()) continue;
    std::string out(label.substr(0, i));
    text::append_utf8(out, it->second);
    out += label.substr(i + 1);
    return out;
  }
  return std::nullopt;
}

}  // namespace spoofchain::unicode
