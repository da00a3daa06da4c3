#pragma once

// Pieces shared by DKIM and ARC.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spoofchain/auth.hpp"

namespace spoofchain::signing {

struct Tag {
  std::string name;
  std::string value;  // folding whitespace removed
  std::size_t value_begin = 0;
  std::size_t value_end = 0;
};

std::vector<Tag> parse_tags(std::string_view raw);
const Tag* find_tag(const std::vector<Tag>& tags, std::string_view name);

// The raw value with the b= tag value emptied.
std::string strip_b_value(std::string_view raw_value);

HeaderParse fields_of(const RawMessage& msg);
bool field_is(const HeaderField& f, std::string_view name);

// Header fields named in `names`, each instance picked bottom-up, canonicalized
// and concatenated. `exclude` skips one field (the signature being checked).
std::string select_headers(const HeaderParse& parse, const std::vector<std::string>& names, Canon canon,
                           std::optional<std::size_t> exclude);

std::string body_hash(const RawMessage& msg, Canon canon);

std::string sign(const DkimKeyPair& key, std::string_view data);

struct PublicKey {
  DkimAlgorithm algorithm = DkimAlgorithm::rsa_sha256;
  std::string key_bytes;  // DER SubjectPublicKeyInfo (rsa) or raw 32 bytes (ed25519)
};

struct KeyLookup {
  std::optional<PublicKey> key;
  std::string error;
};

KeyLookup fetch_key(const Resolver& resolver, std::string_view selector, std::string_view domain);
bool verify(const PublicKey& key, std::string_view data, std::string_view signature);

// Verifies one DKIM-Signature style field (also used for ARC-Message-Signature).
DkimEntry verify_field(const HeaderParse& parse, const HeaderField& field, const RawMessage& msg,
                       const Resolver& resolver, bool dkim_version);

std::optional<DkimAlgorithm> parse_algorithm(std::string_view a);
std::optional<Canonicalization> parse_canon(std::string_view c);
std::string format_canon(Canonicalization c);

}  // namespace spoofchain::signing
