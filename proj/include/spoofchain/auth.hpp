#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "spoofchain/dns.hpp"
#include "spoofchain/header_model.hpp"
#include "spoofchain/profile.hpp"

namespace spoofchain {

// ---- SPF

enum class SpfResult { pass, fail, softfail, neutral, none, temperror, permerror };
enum class IdentitySource { mail_from, helo };

struct SpfVerdict {
  SpfResult result = SpfResult::none;
  std::string identity_domain;
  IdentitySource identity_source = IdentitySource::mail_from;
  std::string detail;
};

SpfVerdict spf_evaluate(std::string_view client_ip, std::string_view helo_domain,
                        const std::optional<std::string>& mail_from, const Resolver& resolver,
                        const QuirkProfile& profile);

// Evaluates check_host() for one domain, without the identity selection.
SpfResult spf_check_host(std::string_view client_ip, std::string_view domain, const Resolver& resolver,
                         std::string* detail = nullptr);

bool ip_in_network(std::string_view ip, std::string_view network, int prefix);

// ---- DKIM

enum class Canon { simple, relaxed };

struct Canonicalization {
  Canon header = Canon::relaxed;
  Canon body = Canon::relaxed;
};

enum class DkimAlgorithm { rsa_sha256, ed25519_sha256 };

struct DkimKeyPair {
  DkimAlgorithm algorithm = DkimAlgorithm::rsa_sha256;
  std::string private_key;  // PEM
  std::string public_record;
  std::string selector;
  std::string domain;

  // Throws bad_key when the PEM cannot be loaded or does not match `algorithm`.
  static DkimKeyPair from_pem(std::string_view pem, std::string selector, std::string domain);
  static DkimKeyPair generate(DkimAlgorithm algorithm, std::string selector, std::string domain);

  std::string record_name() const { return selector + "._domainkey." + domain; }
  std::string zone_line() const;
};

enum class DkimResult { pass, fail, none };

struct DkimEntry {
  std::string domain;
  std::string selector;
  DkimResult result = DkimResult::none;
  std::string detail;
};

std::string canonicalize_body(std::string_view wire_body, Canon canon);
std::string canonicalize_header(std::string_view raw_name, std::string_view raw_value, Canon canon);

std::vector<std::string> default_signed_headers();

// Throws missing_from_header when the message has no From field or
// `signed_headers` omits From.
RawMessage dkim_sign(const RawMessage& msg, const DkimKeyPair& key, Canonicalization canon,
                     const std::vector<std::string>& signed_headers = default_signed_headers());

std::vector<DkimEntry> dkim_verify(const RawMessage& msg, const Resolver& resolver);

// ---- DMARC

enum class DmarcResult { pass, fail, none, temperror };
enum class AlignedVia { spf, dkim, none };
enum class DmarcPolicy { none, quarantine, reject };

struct DmarcVerdict {
  DmarcResult result = DmarcResult::none;
  AlignedVia aligned_via = AlignedVia::none;
  DmarcPolicy policy_applied = DmarcPolicy::none;
  std::string from_domain;
  std::string record_domain;  // where the policy record was found
  std::string detail;
};

struct SuffixSet {
  std::set<std::string> suffixes;
  static SuffixSet builtin();
  // One suffix per line, '#' comments.
  static SuffixSet parse(std::string_view text);
};

// Throws domain_is_suffix.
std::string org_domain(std::string_view domain, const SuffixSet& suffixes);

DmarcVerdict dmarc_evaluate(std::string_view from_domain, const SpfVerdict& spf,
                            const std::vector<DkimEntry>& dkim, const Resolver& resolver,
                            const QuirkProfile& profile, const SuffixSet& suffixes = SuffixSet::builtin());

// ---- ARC and the combined verdict

struct ArcVerdict {
  bool chain_valid = false;
  int instance_count = 0;
  std::optional<std::string> claimed_dmarc;  // dmarc= in the newest AAR
  std::string detail;
};

struct AuthVerdict {
  SpfVerdict spf;
  std::vector<DkimEntry> dkim;
  DmarcVerdict dmarc;
  std::optional<ArcVerdict> arc;
};

// `authserv-id; spf=...; dkim=...; dmarc=...` as recorded in an AAR.
std::string format_auth_results(std::string_view authserv_id, const AuthVerdict& verdict);

// Throws instance_gap unless `instance` is one above the highest ARC-Seal
// instance already present (or 1 on an unsealed message).
RawMessage arc_seal(const RawMessage& msg, const DkimKeyPair& key, int instance,
                    const AuthVerdict& prior_verdict, std::string_view authserv_id);

ArcVerdict arc_validate(const RawMessage& msg, const Resolver& resolver);

int arc_highest_instance(const RawMessage& msg);

std::string_view to_string(SpfResult v);
std::string_view to_string(IdentitySource v);
std::string_view to_string(DkimResult v);
std::string_view to_string(DmarcResult v);
std::string_view to_string(AlignedVia v);
std::string_view to_string(DmarcPolicy v);
std::string_view to_string(Canon v);
std::string_view to_string(DkimAlgorithm v);

}  // namespace spoofchain
