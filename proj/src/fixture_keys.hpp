#pragma once

#include <string_view>

namespace spoofchain::fixtures {

// PEM text of a shipped fixture key, or empty when unknown.
std::string_view fixture_key_pem(std::string_view name);

// Contents of fixtures/zone.txt.
std::string_view zone_text();

}  // namespace spoofchain::fixtures
