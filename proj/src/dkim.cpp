#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/x509.h>

#include <memory>
#include <set>

#include "signing.hpp"
#include "spoofchain/error.hpp"
#include "spoofchain/text.hpp"

namespace spoofchain {

namespace {

struct PkeyFree {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct CtxFree {
  void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};
struct BioFree {
  void operator()(BIO* b) const { BIO_free(b); }
};
struct PkeyCtxFree {
  void operator()(EVP_PKEY_CTX* c) const { EVP_PKEY_CTX_free(c); }
};
using Pkey = std::unique_ptr<EVP_PKEY, PkeyFree>;

Pkey load_private(std::string_view pem) {
  std::unique_ptr<BIO, BioFree> bio(BIO_new_mem_buf(pem.data(), static_cast<int>(pem.size())));
  if (!bio) throw Error(ErrorCode::bad_key, "cannot allocate BIO");
  Pkey key(PEM_read_bio_PrivateKey(bio.get(), nullptr, nullptr, nullptr));
  if (!key) throw Error(ErrorCode::bad_key, "unreadable private key PEM");
  return key;
}

bool is_wsp(char c) { return c == ' ' || c == '\t'; }

std::string remove_fws(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c != ' ' && c != '\t' && c != '\r' && c != '\n') out += c;
  }
  return out;
}

std::string public_record_for(EVP_PKEY* key, DkimAlgorithm alg) {
  std::string bytes;
  if (alg == DkimAlgorithm::ed25519_sha256) {
    std::size_t len = 0;
    EVP_PKEY_get_raw_public_key(key, nullptr, &len);
    bytes.resize(len);
    if (EVP_PKEY_get_raw_public_key(key, reinterpret_cast<unsigned char*>(bytes.data()), &len) != 1) {
      throw Error(ErrorCode::bad_key, "cannot export ed25519 public key");
    }
  } else {
    int len = i2d_PUBKEY(key, nullptr);
    if (len <= 0) throw Error(ErrorCode::bad_key, "cannot export rsa public key");
    bytes.resize(static_cast<std::size_t>(len));
    auto* p = reinterpret_cast<unsigned char*>(bytes.data());
    i2d_PUBKEY(key, &p);
  }
  return std::string("v=DKIM1; k=") + (alg == DkimAlgorithm::ed25519_sha256 ? "ed25519" : "rsa") +
         "; p=" + text::base64_encode(bytes);
}

}  // namespace

namespace signing {

std::vector<Tag> parse_tags(std::string_view raw) {
  std::vector<Tag> tags;
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    auto semi = raw.find(';', pos);
    auto end = semi == std::string_view::npos ? raw.size() : semi;
    auto item = raw.substr(pos, end - pos);
    auto eq = item.find('=');
    if (eq != std::string_view::npos) {
      Tag t;
      t.name = text::to_lower(remove_fws(item.substr(0, eq)));
      t.value_begin = pos + eq + 1;
      t.value_end = end;
      t.value = std::string(text::trim(item.substr(eq + 1)));
      tags.push_back(std::move(t));
    }
    if (semi == std::string_view::npos) break;
    pos = semi + 1;
  }
  return tags;
}

const Tag* find_tag(const std::vector<Tag>& tags, std::string_view name) {
  for (const auto& t : tags) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

std::string strip_b_value(std::string_view raw_value) {
  for (const auto& t : parse_tags(raw_value)) {
    if (t.name == "b") {
      std::string out(raw_value.substr(0, t.value_begin));
      out += raw_value.substr(t.value_end);
      return out;
    }
  }
  return std::string(raw_value);
}

HeaderParse fields_of(const RawMessage& msg) { return parse_header_block(msg.header_block, QuirkProfile{}); }

bool field_is(const HeaderField& f, std::string_view name) { return text::iequals(text::trim(f.raw_name), name); }

std::string select_headers(const HeaderParse& parse, const std::vector<std::string>& names, Canon canon,
                           std::optional<std::size_t> exclude) {
  std::string out;
  std::set<std::size_t> used;
  for (const auto& name : names) {
    for (auto it = parse.fields.rbegin(); it != parse.fields.rend(); ++it) {
      if (used.contains(it->ordinal) || (exclude && it->ordinal == *exclude)) continue;
      if (!field_is(*it, text::trim(name))) continue;
      used.insert(it->ordinal);
      out += canonicalize_header(it->raw_name, it->raw_value, canon);
      break;
    }
  }
  return out;
}

std::string body_hash(const RawMessage& msg, Canon canon) {
  return text::base64_encode(text::sha256(canonicalize_body(wire_body(msg.body), canon)));
}

std::string sign(const DkimKeyPair& key, std::string_view data) {
  auto pkey = load_private(key.private_key);
  std::unique_ptr<EVP_MD_CTX, CtxFree> ctx(EVP_MD_CTX_new());
  std::string input(data);
  const EVP_MD* md = EVP_sha256();
  if (key.algorithm == DkimAlgorithm::ed25519_sha256) {
    input = text::sha256(data);
    md = nullptr;
  }
  if (EVP_DigestSignInit(ctx.get(), nullptr, md, nullptr, pkey.get()) != 1) {
    throw Error(ErrorCode::bad_key, "key does not fit algorithm " + std::string(to_string(key.algorithm)));
  }
  std::size_t len = 0;
  auto* in = reinterpret_cast<const unsigned char*>(input.data());
  if (EVP_DigestSign(ctx.get(), nullptr, &len, in, input.size()) != 1) {
    throw Error(ErrorCode::bad_key, "signing failed");
  }
  std::string sig(len, '\0');
  if (EVP_DigestSign(ctx.get(), reinterpret_cast<unsigned char*>(sig.data()), &len, in, input.size()) != 1) {
    throw Error(ErrorCode::bad_key, "signing failed");
  }
  sig.resize(len);
  return sig;
}

KeyLookup fetch_key(const Resolver& resolver, std::string_view selector, std::string_view domain) {
  auto name = std::string(selector) + "._domainkey." + std::string(domain);
  auto ans = resolver.query(name, RecordType::TXT);
  if (ans.status == DnsStatus::error) return {std::nullopt, "temperror: key lookup failed"};
  if (ans.values.empty()) return {std::nullopt, "no key record at " + name};
  auto tags = parse_tags(ans.values.front());
  if (auto v = find_tag(tags, "v"); v && v->value != "DKIM1") return {std::nullopt, "bad key record version"};
  PublicKey key;
  if (auto k = find_tag(tags, "k")) {
    if (k->value == "ed25519") key.algorithm = DkimAlgorithm::ed25519_sha256;
    else if (k->value != "rsa") return {std::nullopt, "unknown key type " + k->value};
  }
  auto p = find_tag(tags, "p");
  if (!p) return {std::nullopt, "key record without p="};
  auto value = remove_fws(p->value);
  if (value.empty()) return {std::nullopt, "key revoked"};
  auto bytes = text::base64_decode(value);
  if (!bytes) return {std::nullopt, "key p= is not base64"};
  key.key_bytes = std::move(*bytes);
  return {std::move(key), {}};
}

bool verify(const PublicKey& key, std::string_view data, std::string_view signature) {
  Pkey pkey;
  const auto* kb = reinterpret_cast<const unsigned char*>(key.key_bytes.data());
  std::string input(data);
  const EVP_MD* md = EVP_sha256();
  if (key.algorithm == DkimAlgorithm::ed25519_sha256) {
    pkey.reset(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, kb, key.key_bytes.size()));
    input = text::sha256(data);
    md = nullptr;
  } else {
    pkey.reset(d2i_PUBKEY(nullptr, &kb, static_cast<long>(key.key_bytes.size())));
    if (pkey && EVP_PKEY_base_id(pkey.get()) != EVP_PKEY_RSA) return false;
  }
  if (!pkey) return false;
  std::unique_ptr<EVP_MD_CTX, CtxFree> ctx(EVP_MD_CTX_new());
  if (EVP_DigestVerifyInit(ctx.get(), nullptr, md, nullptr, pkey.get()) != 1) return false;
  return EVP_DigestVerify(ctx.get(), reinterpret_cast<const unsigned char*>(signature.data()), signature.size(),
                          reinterpret_cast<const unsigned char*>(input.data()), input.size()) == 1;
}

std::optional<DkimAlgorithm> parse_algorithm(std::string_view a) {
  auto l = text::to_lower(a);
  if (l == "rsa-sha256") return DkimAlgorithm::rsa_sha256;
  if (l == "ed25519-sha256") return DkimAlgorithm::ed25519_sha256;
  return std::nullopt;
}

std::optional<Canonicalization> parse_canon(std::string_view c) {
  auto parse_one = [](std::string_view s) -> std::optional<Canon> {
    if (s == "simple") return Canon::simple;
    if (s == "relaxed") return Canon::relaxed;
    return std::nullopt;
  };
  auto l = text::to_lower(c);
  if (l.empty()) return Canonicalization{Canon::simple, Canon::simple};
  auto slash = l.find('/');
  auto h = parse_one(std::string_view(l).substr(0, slash));
  auto b = slash == std::string::npos ? std::optional<Canon>(Canon::simple)
                                      : parse_one(std::string_view(l).substr(slash + 1));
  if (!h || !b) return std::nullopt;
  return Canonicalization{*h, *b};
}

std::string format_canon(Canonicalization c) {
  return std::string(to_string(c.header)) + "/" + std::string(to_string(c.body));
}

}  // namespace signing

std::string_view to_string(Canon v) { return v == Canon::simple ? "simple" : "relaxed"; }

std::string_view to_string(DkimAlgorithm v) {
  return v == DkimAlgorithm::rsa_sha256 ? "rsa-sha256" : "ed25519-sha256";
}

std::string_view to_string(DkimResult v) {
  switch (v) {
    case DkimResult::pass: return "pass";
    case DkimResult::fail: return "fail";
    case DkimResult::none: return "none";
  }
  return "?";
}

DkimKeyPair DkimKeyPair::from_pem(std::string_view pem, std::string selector, std::string domain) {
  auto key = load_private(pem);
  DkimKeyPair pair;
  switch (EVP_PKEY_base_id(key.get())) {
    case EVP_PKEY_RSA: pair.algorithm = DkimAlgorithm::rsa_sha256; break;
    case EVP_PKEY_ED25519: pair.algorithm = DkimAlgorithm::ed25519_sha256; break;
    default: throw Error(ErrorCode::bad_key, "unsupported key type");
  }
  pair.private_key = std::string(pem);
  pair.public_record = public_record_for(key.get(), pair.algorithm);
  pair.selector = std::move(selector);
  pair.domain = canonical_name(domain);
  return pair;
}

DkimKeyPair DkimKeyPair::generate(DkimAlgorithm algorithm, std::string selector, std::string domain) {
  int id = algorithm == DkimAlgorithm::ed25519_sha256 ? EVP_PKEY_ED25519 : EVP_PKEY_RSA;
  std::unique_ptr<EVP_PKEY_CTX, PkeyCtxFree> ctx(EVP_PKEY_CTX_new_id(id, nullptr));
  EVP_PKEY* raw = nullptr;
  if (!ctx || EVP_PKEY_keygen_init(ctx.get()) != 1 ||
      (id == EVP_PKEY_RSA && EVP_PKEY_CTX_set_rsa_keygen_bits(ctx.get(), 2048) != 1) ||
      EVP_PKEY_keygen(ctx.get(), &raw) != 1) {
    throw Error(ErrorCode::bad_key, "key generation failed");
  }
  Pkey key(raw);
  std::unique_ptr<BIO, BioFree> bio(BIO_new(BIO_s_mem()));
  PEM_write_bio_PrivateKey(bio.get(), key.get(), nullptr, nullptr, 0, nullptr, nullptr);
  char* data = nullptr;
  long len = BIO_get_mem_data(bio.get(), &data);
  return from_pem(std::string_view(data, static_cast<std::size_t>(len)), std::move(selector), std::move(domain));
}

std::string DkimKeyPair::zone_line() const { return record_name() + " TXT \"" + public_record + "\""; }

std::string canonicalize_body(std::string_view body, Canon canon) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < body.size()) {
    auto nl = body.find("\r\n", pos);
    if (nl == std::string_view::npos) {
      lines.emplace_back(body.substr(pos));
      break;
    }
    lines.emplace_back(body.substr(pos, nl - pos));
    pos = nl + 2;
  }
  if (canon == Canon::relaxed) {
    for (auto& line : lines) {
      std::string out;
      bool in_ws = false;
      for (char c : line) {
        if (is_wsp(c)) {
          in_ws = true;
          continue;
        }
        if (in_ws) out += ' ';
        in_ws = false;
        out += c;
      }
      line = std::move(out);  // trailing whitespace dropped with in_ws
    }
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) return canon == Canon::simple ? std::string(text::crlf) : std::string{};
  std::string out;
  for (const auto& line : lines) {
    out += line;
    out += text::crlf;
  }
  return out;
}

std::string canonicalize_header(std::string_view raw_name, std::string_view raw_value, Canon canon) {
  if (canon == Canon::simple) {
    std::string out(raw_name);
    out += ':';
    out += raw_value;
    out += text::crlf;
    return out;
  }
  std::string out = text::to_lower(text::trim(raw_name));
  out += ':';
  auto value = unfold(raw_value);
  std::string compact;
  bool in_ws = false;
  for (char c : value) {
    if (is_wsp(c) || c == '\r' || c == '\n') {
      in_ws = true;
      continue;
    }
    if (in_ws && !compact.empty()) compact += ' ';
    in_ws = false;
    compact += c;
  }
  out += compact;
  out += text::crlf;
  return out;
}

std::vector<std::string> default_signed_headers() {
  return {"from", "to", "subject", "date", "message-id"};
}

RawMessage dkim_sign(const RawMessage& msg, const DkimKeyPair& key, Canonicalization canon,
                     const std::vector<std::string>& signed_headers) {
  auto parse = signing::fields_of(msg);
  bool has_from = std::any_of(parse.fields.begin(), parse.fields.end(),
                              [](const HeaderField& f) { return signing::field_is(f, "from"); });
  bool signs_from = std::any_of(signed_headers.begin(), signed_headers.end(),
                                [](const std::string& h) { return text::iequals(text::trim(h), "from"); });
  if (!has_from || !signs_from) throw Error(ErrorCode::missing_from_header, "DKIM signing requires a From field");

  std::string h;
  for (const auto& name : signed_headers) {
    if (!h.empty()) h += ':';
    h += text::to_lower(text::trim(name));
  }
  std::string value = "v=1; a=" + std::string(to_string(key.algorithm)) + "; c=" + signing::format_canon(canon) +
                      "; d=" + key.domain + "; s=" + key.selector + ";\r\n\th=" + h +
                      "; bh=" + signing::body_hash(msg, canon.body) + ";\r\n\tb=";
  std::string data = signing::select_headers(parse, signed_headers, canon.header, std::nullopt);
  auto sig_line = canonicalize_header("DKIM-Signature", " " + value, canon.header);
  data += sig_line.substr(0, sig_line.size() - 2);
  value += text::base64_encode(signing::sign(key, data));
  RawMessage out = msg;
  prepend_header(out, "DKIM-Signature", value);
  return out;
}

namespace signing {

DkimEntry verify_field(const HeaderParse& parse, const HeaderField& field, const RawMessage& msg,
                       const Resolver& resolver, bool dkim_version) {
  DkimEntry entry;
  entry.result = DkimResult::fail;
  auto tags = signing::parse_tags(field.raw_value);
  auto get = [&](std::string_view n) -> std::string {
    auto t = signing::find_tag(tags, n);
    return t ? t->value : std::string{};
  };
  entry.domain = canonical_name(get("d"));
  entry.selector = get("s");
  for (auto required : {"a", "b", "bh", "d", "h", "s"}) {
    if (!signing::find_tag(tags, required)) {
      entry.detail = std::string("permerror: missing tag ") + required;
      return entry;
    }
  }
  if (dkim_version && get("v") != "1") {
    entry.detail = "permerror: unsupported version";
    return entry;
  }
  if (signing::find_tag(tags, "l")) {
    entry.detail = "permerror: body length tag not supported";
    return entry;
  }
  auto alg = signing::parse_algorithm(get("a"));
  if (!alg) {
    entry.detail = "permerror: unsupported algorithm " + get("a");
    return entry;
  }
  auto canon = signing::parse_canon(get("c"));
  if (!canon) {
    entry.detail = "permerror: bad canonicalization";
    return entry;
  }
  std::vector<std::string> names;
  bool covers_from = false;
  for (const auto& n : text::split(remove_fws(get("h")), ':')) {
    names.emplace_back(n);
    covers_from = covers_from || text::iequals(n, "from");
  }
  if (!covers_from) {
    entry.detail = "permerror: From not signed";
    return entry;
  }
  if (signing::body_hash(msg, canon->body) != remove_fws(get("bh"))) {
    entry.detail = "body hash mismatch";
    return entry;
  }
  auto key = signing::fetch_key(resolver, entry.selector, entry.domain);
  if (!key.key) {
    entry.detail = key.error;
    return entry;
  }
  if (key.key->algorithm != *alg) {
    entry.detail = "key type does not match a=";
    return entry;
  }
  auto sig = text::base64_decode(remove_fws(get("b")));
  if (!sig) {
    entry.detail = "permerror: b= is not base64";
    return entry;
  }
  std::string data = signing::select_headers(parse, names, canon->header, field.ordinal);
  auto sig_line = canonicalize_header(field.raw_name, signing::strip_b_value(field.raw_value), canon->header);
  data += sig_line.substr(0, sig_line.size() - 2);
  if (!signing::verify(*key.key, data, *sig)) {
    entry.detail = "signature mismatch";
    return entry;
  }
  entry.result = DkimResult::pass;
  return entry;
}

}  // namespace signing

std::vector<DkimEntry> dkim_verify(const RawMessage& msg, const Resolver& resolver) {
  auto parse = signing::fields_of(msg);
  std::vector<DkimEntry> out;
  for (const auto& f : parse.fields) {
    if (signing::field_is(f, "DKIM-Signature")) out.push_back(signing::verify_field(parse, f, msg, resolver, true));
  }
  return out;
}

}  // namespace spoofchain
