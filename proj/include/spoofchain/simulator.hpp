#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "spoofchain/auth.hpp"
#include "spoofchain/corpus.hpp"
#include "spoofchain/dns.hpp"
#include "spoofchain/header_model.hpp"
#include "spoofchain/profile.hpp"

namespace spoofchain {

enum class Disposition { inbox, spam, reject };
std::string_view to_string(Disposition d);

struct SendingOutcome {
  bool accepted = true;
  bool bypassed = false;  // no authenticated submission
  std::string reason;
};

struct ReceivingOutcome {
  AuthVerdict verdict;
  DmarcResult effective_dmarc = DmarcResult::none;
  bool arc_override = false;  // a trusted ARC chain turned a DMARC fail into a pass
  Disposition disposition = Disposition::inbox;
  std::string reason;
};

struct ForwardingOutcome {
  bool forwarded = false;
  bool dkim_added = false;
  bool arc_added = false;
  std::string reason;
};

struct TraceStep {
  std::string step;
  std::string input;
  std::string output;
};

struct RenderDecision {
  std::string displayed_address;
  std::optional<std::string> displayed_name;
  std::set<Alert> alerts;        // everything detected
  std::set<Alert> shown_alerts;  // the subset this client surfaces
  std::vector<TraceStep> extraction_trace;
};

// What the receiving side knew, for the sender-inconsistency check.
struct RenderContext {
  std::string envelope_domain;  // MAIL FROM domain, else HELO
  std::string auth_from_domain;
  bool aligned_dkim_pass = false;
  bool dmarc_pass = false;
};

struct ChainReport {
  std::string case_id;
  std::vector<AttackId> ids;
  std::string scenario;
  std::string hop;  // "forwarder" or "final"
  std::string profile_name;
  std::string spoof_identity;
  bool sic_enabled = false;  // the rendering client has the inconsistency check
  SendingOutcome sending;
  std::optional<ReceivingOutcome> receiving;
  std::optional<ForwardingOutcome> forwarding;
  std::optional<RenderDecision> rendering;
  std::optional<Stage> stopped_at;
  std::string stop_reason;
  bool success = false;
};

struct SuccessInputs {
  bool delivered = false;
  std::string displayed_address;
  std::string spoof_identity;
  DmarcResult dmarc = DmarcResult::none;
  Disposition disposition = Disposition::inbox;
  std::set<Alert> shown_alerts;
};

// delivered, shown address equals the spoof (confusable skeleton, case
// folded), DMARC pass or none, inbox, and no alert on screen.
bool success_rule(const SuccessInputs& in);

struct Scenario {
  std::string name;
  QuirkProfile sender;
  QuirkProfile receiver;
  QuirkProfile forwarder;
  std::optional<QuirkProfile> renderer;  // defaults to the receiver
  std::shared_ptr<const Resolver> resolver;
  std::map<std::string, std::string> mta_ips;  // provider domain -> outbound IP
  std::map<std::string, DkimKeyPair> keys;     // signing domain -> key
  std::vector<std::string> protected_domains;
  SuffixSet suffixes = SuffixSet::builtin();
  std::string authserv_id = "mx.spoofchain.test";

  const QuirkProfile& render_profile() const { return renderer ? *renderer : receiver; }
};

SendingOutcome run_sending_stage(const RawMessage& msg, const QuirkProfile& profile);

ReceivingOutcome run_receiving_stage(const RawMessage& msg, const QuirkProfile& profile, const Resolver& resolver,
                                     const SuffixSet& suffixes = SuffixSet::builtin());

struct ForwardResult {
  RawMessage message;
  ForwardingOutcome outcome;
};

// Throws no_forward_target when the forwarder insists on a verified target
// and the setup has none, scenario_incomplete when a needed key is missing.
ForwardResult run_forwarding_stage(const RawMessage& msg, const QuirkProfile& profile, const ForwardSetup& setup,
                                   const Scenario& scenario, const AuthVerdict& prior);

RenderDecision run_rendering_stage(const RawMessage& msg, const QuirkProfile& profile,
                                   const std::vector<std::string>& protected_domains,
                                   const RenderContext& context = {});

RenderContext render_context(const RawMessage& msg, const ReceivingOutcome& receiving,
                             const SuffixSet& suffixes = SuffixSet::builtin());

// One report per receiving hop; the last one is the case outcome. Throws
// scenario_incomplete when the case needs something the scenario lacks.
std::vector<ChainReport> run_chain(const AttackCase& c, const Scenario& scenario);
bool case_success(const std::vector<ChainReport>& reports);

// Fixture zone with the fixture DKIM keys, shared by the builtin scenarios.
std::shared_ptr<const DnsZone> fixture_zone();
std::map<std::string, DkimKeyPair> fixture_keys();
std::vector<std::string> builtin_scenario_names();
Scenario builtin_scenario(std::string_view name);

// `key = value` document: name, sender, receiver, forwarder, renderer,
// zone, key (`<domain> <selector> <pem path>`), mta_ip (`<domain> <ip>`),
// protected, suffixes, authserv_id. Relative paths resolve against the
// file's directory; profile names resolve to `<profiles_dir>/<name>.profile`
// first, then to the builtin set.
Scenario load_scenario(const std::filesystem::path& path, const std::filesystem::path& profiles_dir = {});

// Name of a builtin scenario or a path to a scenario file.
Scenario resolve_scenario(std::string_view name_or_path, const std::filesystem::path& profiles_dir = {});

}  // namespace spoofchain
