#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace spoofchain::unicode {

// IDNA (UTS 46). On conversion errors the input comes back unchanged.
std::string idn_to_unicode(std::string_view domain);
std::string idn_to_ascii(std::string_view domain);

// Case-folded UTS 39 confusable skeleton; bidi and zero-width format
// characters are dropped first.
std::string skeleton(std::string_view text);
bool confusable(std::string_view a, std::string_view b);

// True when letters from more than one script occur in one label.
bool mixed_script(std::string_view label);

bool is_bidi_control(char32_t cp);
bool has_bidi_controls(std::string_view text);

// Visual order under explicit embeddings and overrides (LRE/RLE/LRO/RLO/
// LRI/RLI/FSI with PDF/PDI). Runs with right-to-left direction have their
// units reversed; a nested run moves as one unit. Controls are removed.
// Implicit levels of strong RTL letters are not modeled.
std::string bidi_visual(std::string_view text);

// Drops bidi controls and zero-width characters.
std::string strip_format(std::string_view text);

// Replaces the first character with a cross-script lookalike (Latin to
// Cyrillic or Greek). nullopt when no character has one.
std::optional<std::string> substitute_confusable(std::string_view label);

}  // namespace spoofchain::unicode
