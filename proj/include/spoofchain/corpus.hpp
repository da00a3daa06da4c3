#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spoofchain/auth.hpp"
#include "spoofchain/header_model.hpp"

namespace spoofchain {

enum class AttackId { A1, A2, A3, A4, A5, A6, A7, A8, A9, A10, A11, A12, A13, A14 };
enum class AttackModel { shared_mta, direct_mta, forward_mta };
enum class Stage { sending, receiving, forwarding, rendering };

std::string_view to_string(AttackId id);
std::string_view to_string(AttackModel m);
std::string_view to_string(Stage s);
std::optional<AttackId> parse_attack_id(std::string_view s);
std::vector<AttackId> all_attack_ids();

// Stage whose check the attack is aimed at.
Stage home_stage(AttackId id);
int variant_count(AttackId id);
std::string variant_label(AttackId id, int variant);

struct ExpectedOutcome {
  std::optional<bool> sending_accept;  // nullopt when the sending stage is bypassed
  std::optional<SpfResult> spf;
  std::optional<DkimResult> dkim;
  std::optional<DmarcResult> dmarc;  // effective result
  std::optional<std::string> displayed_address;
  std::optional<bool> sic_alert;
  bool success = false;
};

struct ForwardSetup {
  std::string account;  // attacker-controlled mailbox at the forwarder
  std::string target;
  bool target_verified = false;
  // The forwarded copy goes back to the attacker, who resends it with the
  // envelope of the second message.
  bool resend = false;
};

struct AttackCase {
  std::vector<AttackId> ids;
  std::vector<AttackModel> model;
  int variant = 0;
  std::string variant_label;
  std::vector<RawMessage> messages;
  std::optional<ForwardSetup> forward;
  std::string spoof_identity;
  std::string attacker_identity;
  std::string target;
  std::map<std::string, ExpectedOutcome> expectations;

  std::string name() const;  // "A4-v2", "A2+A4"
};

struct Bindings {
  std::string spoof = "Alice@a.com";
  std::string attacker = "Oscar@attack.com";
  std::string target = "Bob@b.com";
};

struct Knobs {
  int variant = 0;
  std::uint64_t seed = 1;
  std::string attacker_ip = "203.0.113.66";
  std::optional<std::string> mail_from;  // override for direct sends
  std::optional<std::string> forwarder_account;
  std::size_t split_at = 2;  // A13: where the extra '@' goes in the first domain label
};

// Throws unsupported_knob for meaningless knob/id pairs (A3 with a MAIL FROM
// override, out-of-range variants, A11 without a forwarder account).
AttackCase generate(AttackId id, const Bindings& bindings, const Knobs& knobs = {});

// Throws incompatible_combination: duplicate ids, two sending-stage ids, two
// forwarding ids, or receiving/rendering ids that rewrite the same part of
// the From identity.
AttackCase combine(const std::vector<AttackId>& ids, const Bindings& bindings, const Knobs& knobs = {});

enum class Mutation { repeat_header, insert_space, insert_unicode, encode_word, case_vary };
std::string_view to_string(Mutation m);
std::optional<Mutation> parse_mutation(std::string_view s);

// Throws locus_not_found when no field has the locus name.
RawMessage mutate(const RawMessage& msg, Mutation mutation, std::string_view locus, std::uint64_t seed = 1);

// Where each attack is known to work among the shipped fixtures, and the
// hand-derived outcome there.
struct Witness {
  std::string scenario;
  int variant = 0;
  Bindings bindings;
  Knobs knobs;
  ExpectedOutcome expected;
};
const Witness& witness(AttackId id);
AttackCase witness_case(AttackId id);
AttackCase shared_mta_case();
AttackCase forwarding_case();

// Corpus on disk: one .eml per message plus manifest.json.
void export_corpus(const std::filesystem::path& dir, const std::vector<AttackCase>& cases);
std::vector<AttackCase> import_corpus(const std::filesystem::path& dir);

}  // namespace spoofchain
