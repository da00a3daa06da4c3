#include "spoofchain/cli.hpp"

#include <cstdlib>
#include <fstream>

#include "CLI11.hpp"
#include "spoofchain/config.hpp"
#include "spoofchain/corpus.hpp"
#include "spoofchain/live.hpp"
#include "spoofchain/report.hpp"
#include "spoofchain/simulator.hpp"
#include "spoofchain/text.hpp"

namespace spoofchain {

namespace {

struct CaseFlags {
  std::vector<std::string> attacks;
  bool combine = false;
  std::optional<int> variant;
  bool all_variants = false;
  std::string spoof;
  std::string attacker;
  std::string target;
  std::optional<std::string> mail_from;
  std::optional<std::string> forwarder_account;
  std::uint64_t seed = 1;
  std::optional<std::string> attacker_ip;
  std::optional<std::size_t> split_at;
  bool case1 = false;
  bool case2 = false;
  bool witnesses = false;
  std::optional<std::string> mutation;
  std::string locus = "From";
};

void add_case_flags(CLI::App* cmd, CaseFlags& f) {
  cmd->add_option("--attack", f.attacks, "Attack ids (A1..A14), comma separated or repeated; 'all' for every id")
      ->delimiter(',');
  cmd->add_flag("--combine", f.combine, "Combine the listed ids into one case");
  cmd->add_option("--variant", f.variant, "Payload variant");
  cmd->add_flag("--all-variants", f.all_variants, "Emit every variant of each id");
  cmd->add_option("--spoof", f.spoof, "Address to impersonate");
  cmd->add_option("--attacker", f.attacker, "Attacker's own address");
  cmd->add_option("--target", f.target, "Recipient");
  cmd->add_option("--mail-from", f.mail_from, "MAIL FROM override for direct sends");
  cmd->add_option("--forwarder-account", f.forwarder_account, "Attacker account at the forwarding service");
  cmd->add_option("--seed", f.seed, "Seed for Message-ID and mutations");
  cmd->add_option("--attacker-ip", f.attacker_ip, "Client IP of direct sends");
  cmd->add_option("--split-at", f.split_at, "A13: position of the extra '@' in the first domain label");
  cmd->add_flag("--case1", f.case1, "Add the shared-MTA combination A2+A4");
  cmd->add_flag("--case2", f.case2, "Add the forwarding combination A2+A3+A10");
  cmd->add_flag("--witnesses", f.witnesses, "Use each id's known-vulnerable bindings");
  cmd->add_option("--mutate", f.mutation,
                  "Apply a header mutation: repeat-header, insert-space, insert-unicode, encode-word, case-vary");
  cmd->add_option("--locus", f.locus, "Header the mutation targets");
}

std::vector<AttackId> parse_ids(const std::vector<std::string>& names) {
  std::vector<AttackId> ids;
  for (const auto& n : names) {
    if (text::iequals(n, "all")) {
      auto all = all_attack_ids();
      ids.insert(ids.end(), all.begin(), all.end());
      continue;
    }
    auto id = parse_attack_id(text::trim(n));
    if (!id) throw Error(ErrorCode::unsupported_knob, "unknown attack id: " + n);
    ids.push_back(*id);
  }
  return ids;
}

std::vector<AttackCase> build_cases(const CaseFlags& f) {
  auto ids = parse_ids(f.attacks);
  std::vector<AttackCase> cases;
  auto bindings_for = [&](AttackId id) {
    Bindings b = f.witnesses ? witness(id).bindings : Bindings{};
    if (!f.spoof.empty()) b.spoof = f.spoof;
    if (!f.attacker.empty()) b.attacker = f.attacker;
    if (!f.target.empty()) b.target = f.target;
    return b;
  };
  auto knobs_for = [&](AttackId id, int variant) {
    Knobs k = f.witnesses ? witness(id).knobs : Knobs{};
    k.variant = variant;
    k.seed = f.seed;
    if (f.mail_from) k.mail_from = f.mail_from;
    if (f.forwarder_account) k.forwarder_account = f.forwarder_account;
    if (f.attacker_ip) k.attacker_ip = *f.attacker_ip;
    if (f.split_at) k.split_at = *f.split_at;
    return k;
  };
  if (f.combine) {
    if (ids.empty()) throw Error(ErrorCode::unsupported_knob, "--combine needs --attack");
    cases.push_back(combine(ids, bindings_for(ids.front()), knobs_for(ids.front(), f.variant.value_or(0))));
  } else {
    for (auto id : ids) {
      int base = f.variant.value_or(f.witnesses ? witness(id).variant : 0);
      if (f.all_variants) {
        for (int v = 0; v < variant_count(id); ++v) cases.push_back(generate(id, bindings_for(id), knobs_for(id, v)));
      } else {
        cases.push_back(generate(id, bindings_for(id), knobs_for(id, base)));
      }
    }
  }
  if (f.case1) cases.push_back(shared_mta_case());
  if (f.case2) cases.push_back(forwarding_case());
  if (f.mutation) {
    auto m = parse_mutation(*f.mutation);
    if (!m) throw Error(ErrorCode::unsupported_knob, "unknown mutation: " + *f.mutation);
    for (auto& c : cases) {
      for (auto& msg : c.messages) msg = mutate(msg, *m, f.locus, f.seed);
    }
  }
  return cases;
}

// Every witness with all its variants, plus both combinations.
std::vector<AttackCase> default_cases() {
  std::vector<AttackCase> cases;
  for (auto id : all_attack_ids()) {
    const auto& w = witness(id);
    for (int v = 0; v < variant_count(id); ++v) {
      auto k = w.knobs;
      k.variant = v;
      cases.push_back(generate(id, w.bindings, k));
    }
  }
  cases.push_back(shared_mta_case());
  cases.push_back(forwarding_case());
  return cases;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::io:
    case ErrorCode::connection_failed:
    case ErrorCode::rate_limited:
    case ErrorCode::rejected:
    case ErrorCode::append_rejected:
      return kExitEnvironment;
    default:
      return kExitUsage;
  }
}

void apply_overrides(Scenario& sc, const std::optional<std::filesystem::path>& zone,
                     const std::optional<std::filesystem::path>& keys) {
  if (zone) sc.resolver = std::make_shared<const DnsZone>(DnsZone::parse(read_file(*zone)));
  if (keys) {
    if (!std::filesystem::is_directory(*keys)) throw Error(ErrorCode::io, "no key directory " + keys->string());
    for (const auto& entry : std::filesystem::directory_iterator(*keys)) {
      if (entry.path().extension() != ".pem") continue;
      auto domain = entry.path().stem().string();
      sc.keys.insert_or_assign(domain, DkimKeyPair::from_pem(read_file(entry.path()), "s1", domain));
    }
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, CliSeams seams) {
  CLI::App app{"Email sender-spoofing test harness"};
  app.require_subcommand(1);
  std::optional<std::string> config_path;
  app.add_option("--config", config_path, "Harness config file (default: $SPOOFCHAIN_CONFIG)");

  auto* gen = app.add_subcommand("gen", "Generate attack cases as .eml files plus manifest.json");
  CaseFlags gen_flags;
  std::string gen_out;
  add_case_flags(gen, gen_flags);
  gen->add_option("--out", gen_out, "Output directory");

  auto* sim = app.add_subcommand("simulate", "Run cases through a scenario's four-stage chain");
  CaseFlags sim_flags;
  std::optional<std::string> scenario_name, corpus_dir, zone_flag, keys_flag, profiles_flag, sim_out;
  std::string sim_format = "text";
  add_case_flags(sim, sim_flags);
  sim->add_option("--scenario", scenario_name, "Builtin scenario name or scenario file");
  sim->add_option("--corpus", corpus_dir, "Corpus directory written by gen");
  sim->add_option("--zone", zone_flag, "Zone file replacing the scenario's zone");
  sim->add_option("--keys", keys_flag, "Directory of <domain>.pem signing keys (selector s1)");
  sim->add_option("--profiles", profiles_flag, "Directory of <name>.profile files");
  sim->add_option("--out", sim_out, "Directory for reports.json, matrix.json and matrix.txt");
  sim->add_option("--format", sim_format, "Stdout format: text or json")->check(CLI::IsMember({"text", "json"}));

  auto* live = app.add_subcommand("live", "Deliver cases to an operator-owned target");
  CaseFlags live_flags;
  std::optional<std::string> target_path, live_corpus, live_case, live_out;
  int repeat = 1;
  std::size_t step = 0;
  bool use_imap = false;
  add_case_flags(live, live_flags);
  live->add_option("--target-config", target_path, "Target config file");
  live->add_option("--corpus", live_corpus, "Corpus directory written by gen");
  live->add_option("--case", live_case, "Case name inside --corpus");
  live->add_option("--repeat", repeat, "Deliveries per case, spaced by the target interval")
      ->check(CLI::Range(1, 100));
  live->add_option("--step", step, "Message step of a multi-message case (0-based)");
  live->add_flag("--imap", use_imap, "Place with IMAP APPEND instead of SMTP");
  live->add_option("--out", live_out, "Directory for transcripts");

  auto* rep = app.add_subcommand("report", "Aggregate saved chain reports");
  std::string rep_input;
  std::string rep_format = "text";
  std::optional<std::string> rep_out;
  rep->add_option("--input", rep_input, "reports.json from simulate")->required();
  rep->add_option("--format", rep_format, "text or json")->check(CLI::IsMember({"text", "json"}));
  rep->add_option("--out", rep_out, "Write report.json and matrix.txt here");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "spoofchain: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    HarnessConfig cfg;
    if (!config_path) {
      if (const char* env = std::getenv("SPOOFCHAIN_CONFIG"); env && *env) config_path = env;
    }
    if (config_path) cfg = load_harness_config(*config_path);

    if (gen->parsed()) {
      if (gen_flags.attacks.empty() && !gen_flags.case1 && !gen_flags.case2) {
        err << "spoofchain gen: nothing to generate; pass --attack, --case1 or --case2\n";
        return kExitUsage;
      }
      auto cases = build_cases(gen_flags);
      std::filesystem::path dir = gen_out.empty() ? cfg.output_dir / "corpus" : std::filesystem::path(gen_out);
      export_corpus(dir, cases);
      std::size_t files = 0;
      for (const auto& c : cases) files += c.messages.size();
      auto plural = [](std::size_t n, const char* word) { return std::to_string(n) + " " + word + (n == 1 ? "" : "s"); };
      out << "wrote " << plural(cases.size(), "case") << " (" << plural(files, "message") << ") to " << dir.string()
          << "\n";
      return kExitOk;
    }

    if (sim->parsed()) {
      auto profiles = profiles_flag ? std::filesystem::path(*profiles_flag) : cfg.profiles_dir;
      auto sc = resolve_scenario(scenario_name.value_or(cfg.default_scenario), profiles);
      std::optional<std::filesystem::path> zone =
          zone_flag ? std::optional<std::filesystem::path>(*zone_flag)
                    : (cfg.zone_file.empty() ? std::nullopt : std::optional(cfg.zone_file));
      std::optional<std::filesystem::path> keys =
          keys_flag ? std::optional<std::filesystem::path>(*keys_flag)
                    : (cfg.key_dir.empty() ? std::nullopt : std::optional(cfg.key_dir));
      if (zone && !std::filesystem::exists(*zone)) throw Error(ErrorCode::io, "zone file not found: " + zone->string());
      apply_overrides(sc, zone, keys);

      std::vector<AttackCase> cases;
      if (corpus_dir) cases = import_corpus(*corpus_dir);
      if (!sim_flags.attacks.empty() || sim_flags.case1 || sim_flags.case2) {
        auto more = build_cases(sim_flags);
        cases.insert(cases.end(), more.begin(), more.end());
      }
      if (cases.empty()) cases = default_cases();

      std::vector<ChainReport> reports;
      for (const auto& c : cases) {
        auto r = run_chain(c, sc);
        reports.insert(reports.end(), r.begin(), r.end());
      }
      auto matrix = aggregate(reports);
      if (sim_out) {
        std::filesystem::create_directories(*sim_out);
        write_file(std::filesystem::path(*sim_out) / "reports.json", report_document(reports));
        write_file(std::filesystem::path(*sim_out) / "matrix.json", emit(matrix, ReportFormat::json));
        write_file(std::filesystem::path(*sim_out) / "matrix.txt", emit(matrix, ReportFormat::text));
      }
      if (sim_format == "json") {
        out << report_document(reports);
      } else {
        for (const auto& r : reports) {
          if (r.hop != "final") continue;
          out << (r.success ? "SUCCESS " : "blocked ") << r.case_id << " [" << r.scenario << "]";
          if (r.rendering) out << " shown=" << text::escape(r.rendering->displayed_address);
          if (r.stopped_at) out << " stopped at " << to_string(*r.stopped_at) << ": " << r.stop_reason;
          out << "\n";
        }
        out << "\n" << emit(matrix, ReportFormat::text);
      }
      return kExitOk;
    }

    if (live->parsed()) {
      std::optional<std::filesystem::path> tp =
          target_path ? std::optional<std::filesystem::path>(*target_path) : cfg.target_config;
      if (!tp) {
        err << "spoofchain live: no target config; pass --target-config or set target_config\n";
        return kExitUsage;
      }
      if (use_imap && repeat > 1) {
        err << "spoofchain live: --repeat applies to SMTP delivery only\n";
        return kExitUsage;
      }
      auto target = parse_target_config(read_file(*tp));
      check_target(target);

      std::vector<AttackCase> cases;
      if (live_corpus) {
        for (auto& c : import_corpus(*live_corpus)) {
          if (!live_case || c.name() == *live_case) cases.push_back(std::move(c));
        }
        if (cases.empty()) throw Error(ErrorCode::precondition, "no matching case in " + *live_corpus);
      } else {
        if (live_flags.attacks.empty() && !live_flags.case1 && !live_flags.case2) {
          err << "spoofchain live: pass --attack or --corpus\n";
          return kExitUsage;
        }
        cases = build_cases(live_flags);
      }

      TcpConnector tcp;
      SystemClock system_clock;
      LiveTester tester(seams.connector ? *seams.connector : tcp, seams.clock ? *seams.clock : system_clock,
                        seams.limiter ? *seams.limiter : RateLimiter::process());
      std::filesystem::path dir = live_out ? std::filesystem::path(*live_out) : cfg.output_dir / "transcripts";
      std::filesystem::create_directories(dir);
      int written = 0;
      for (const auto& c : cases) {
        std::vector<Transcript> trs;
        if (use_imap) {
          trs.push_back(tester.imap_append(c, target, step));
        } else {
          trs = tester.deliver_repeated(c, target, repeat, step);
        }
        for (std::size_t i = 0; i < trs.size(); ++i) {
          auto file = dir / (c.name() + "-" + std::to_string(i + 1) + "." + trs[i].protocol + ".log");
          write_file(file, trs[i].to_text());
          out << "delivered " << c.name() << " attempt " << i + 1 << " -> " << file.string() << "\n";
          ++written;
        }
      }
      out << written << " transcript(s) written\n";
      return kExitOk;
    }

    if (rep->parsed()) {
      auto reports = reports_from_json(read_file(rep_input));
      auto matrix = aggregate(reports);
      if (rep_out) {
        std::filesystem::create_directories(*rep_out);
        write_file(std::filesystem::path(*rep_out) / "report.json", report_document(reports));
        write_file(std::filesystem::path(*rep_out) / "matrix.txt", emit(matrix, ReportFormat::text));
      }
      if (rep_format == "json") {
        out << emit(matrix, ReportFormat::json);
      } else {
        out << emit(matrix, ReportFormat::text);
        bool any = false;
        for (const auto& r : reports) {
          auto adv = advise(r);
          if (adv.empty()) continue;
          if (!any) out << "\nAdvisories\n";
          any = true;
          out << "  " << r.case_id << " [" << r.scenario << "]\n";
          for (const auto& a : adv) out << "    - " << a << "\n";
        }
      }
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "spoofchain: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "spoofchain: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace spoofchain
