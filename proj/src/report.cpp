#include "spoofchain/report.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"
#include "spoofchain/error.hpp"

namespace spoofchain {

using nlohmann::json;

namespace {

constexpr Stage kStages[] = {Stage::sending, Stage::receiving, Stage::forwarding, Stage::rendering};

template <typename E, std::size_t N>
E enum_named(const json& j, const E (&values)[N], const char* what) {
  auto s = j.get<std::string>();
  for (auto v : values) {
    if (to_string(v) == s) return v;
  }
  throw Error(ErrorCode::config, std::string("report: bad ") + what + " value " + s);
}

constexpr SpfResult kSpf[] = {SpfResult::pass, SpfResult::fail, SpfResult::softfail, SpfResult::neutral,
                              SpfResult::none, SpfResult::temperror, SpfResult::permerror};
constexpr IdentitySource kSource[] = {IdentitySource::mail_from, IdentitySource::helo};
constexpr DkimResult kDkim[] = {DkimResult::pass, DkimResult::fail, DkimResult::none};
constexpr DmarcResult kDmarc[] = {DmarcResult::pass, DmarcResult::fail, DmarcResult::none, DmarcResult::temperror};
constexpr AlignedVia kVia[] = {AlignedVia::spf, AlignedVia::dkim, AlignedVia::none};
constexpr DmarcPolicy kPolicy[] = {DmarcPolicy::none, DmarcPolicy::quarantine, DmarcPolicy::reject};
constexpr Disposition kDisposition[] = {Disposition::inbox, Disposition::spam, Disposition::reject};

AttackId id_named(const json& j) {
  auto id = parse_attack_id(j.get<std::string>());
  if (!id) throw Error(ErrorCode::config, "report: unknown attack id " + j.get<std::string>());
  return *id;
}

json ids_json(const std::vector<AttackId>& ids) {
  json a = json::array();
  for (auto id : ids) a.push_back(to_string(id));
  return a;
}

std::string dump(const json& j) { return j.dump(2, ' ', false, json::error_handler_t::replace) + "\n"; }

}  // namespace

std::string_view stage_title(Stage s) {
  switch (s) {
    case Stage::sending: return "Sending";
    case Stage::receiving: return "Receiving";
    case Stage::forwarding: return "Forwarding";
    case Stage::rendering: return "UI Rendering";
  }
  return "?";
}

Stage attributed_stage(AttackId id, const ChainReport& report) {
  auto stage = home_stage(id);
  if (stage == Stage::sending && report.sending.bypassed) return Stage::receiving;
  return stage;
}

ResultMatrix aggregate(const std::vector<ChainReport>& reports) {
  std::map<std::string, MatrixRow> rows;
  for (const auto& r : reports) {
    if (r.hop != "final") continue;
    auto& row = rows[r.profile_name];
    row.name = r.profile_name;
    for (auto s : kStages) row.cells[s];
    if (r.receiving) row.deployment.spf = row.deployment.dkim = row.deployment.dmarc = true;
    row.deployment.sic = row.deployment.sic || r.sic_enabled;
    if (!r.success) continue;
    for (auto id : r.ids) {
      auto& cell = row.cells[attributed_stage(id, r)];
      if (std::find(cell.begin(), cell.end(), id) == cell.end()) cell.push_back(id);
    }
  }
  ResultMatrix m;
  for (auto& [name, row] : rows) {
    for (auto& [stage, ids] : row.cells) std::sort(ids.begin(), ids.end());
    m.rows.push_back(std::move(row));
  }
  return m;
}

// ---- matrix formats

namespace {

json matrix_json(const ResultMatrix& m) {
  json j;
  j["schema_version"] = 1;
  j["stages"] = json::array();
  for (auto s : kStages) j["stages"].push_back(to_string(s));
  j["rows"] = json::array();
  for (const auto& r : m.rows) {
    json row;
    row["name"] = r.name;
    row["deployment"] = {{"spf", r.deployment.spf},
                         {"dkim", r.deployment.dkim},
                         {"dmarc", r.deployment.dmarc},
                         {"sic", r.deployment.sic}};
    row["cells"] = json::object();
    for (const auto& [stage, ids] : r.cells) row["cells"][std::string(to_string(stage))] = ids_json(ids);
    j["rows"].push_back(row);
  }
  return j;
}

ResultMatrix matrix_from(const json& j) {
  if (j.value("schema_version", 0) != 1) throw Error(ErrorCode::config, "report: unsupported schema_version");
  ResultMatrix m;
  for (const auto& jr : j.at("rows")) {
    MatrixRow r;
    r.name = jr.at("name").get<std::string>();
    const auto& d = jr.at("deployment");
    r.deployment = {d.at("spf").get<bool>(), d.at("dkim").get<bool>(), d.at("dmarc").get<bool>(),
                    d.at("sic").get<bool>()};
    for (auto s : kStages) {
      auto& cell = r.cells[s];
      for (const auto& id : jr.at("cells").at(std::string(to_string(s)))) cell.push_back(id_named(id));
    }
    m.rows.push_back(std::move(r));
  }
  return m;
}

std::string matrix_text(const ResultMatrix& m) {
  std::vector<std::vector<std::string>> table;
  std::vector<std::string> header{"Profile", "SPF", "DKIM", "DMARC", "SIC"};
  for (auto s : kStages) header.emplace_back(stage_title(s));
  table.push_back(header);
  auto yes = [](bool b) { return std::string(b ? "yes" : "no"); };
  for (const auto& r : m.rows) {
    std::vector<std::string> line{r.name, yes(r.deployment.spf), yes(r.deployment.dkim), yes(r.deployment.dmarc),
                                  yes(r.deployment.sic)};
    for (auto s : kStages) {
      std::string cell;
      auto it = r.cells.find(s);
      if (it != r.cells.end()) {
        for (auto id : it->second) {
          if (!cell.empty()) cell += ", ";
          cell += to_string(id);
        }
      }
      line.push_back(cell.empty() ? "-" : cell);
    }
    table.push_back(line);
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : table) {
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
  }
  std::string out;
  auto put = [&](const std::vector<std::string>& line) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i) out += " | ";
      out += line[i];
      out.append(width[i] - line[i].size(), ' ');
    }
    out += '\n';
  };
  put(table.front());
  for (std::size_t i = 0; i < width.size(); ++i) {
    if (i) out += "-+-";
    out.append(width[i], '-');
  }
  out += '\n';
  for (std::size_t i = 1; i < table.size(); ++i) put(table[i]);
  return out;
}

}  // namespace

std::string emit(const ResultMatrix& matrix, ReportFormat format) {
  return format == ReportFormat::json ? dump(matrix_json(matrix)) : matrix_text(matrix);
}

ResultMatrix parse_matrix_json(std::string_view text) {
  try {
    return matrix_from(json::parse(text));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config, std::string("report: ") + e.what());
  }
}

// ---- chain reports

namespace {

json report_json(const ChainReport& r) {
  json j;
  j["case_id"] = r.case_id;
  j["ids"] = ids_json(r.ids);
  j["scenario"] = r.scenario;
  j["hop"] = r.hop;
  j["profile"] = r.profile_name;
  j["spoof_identity"] = r.spoof_identity;
  j["sic_enabled"] = r.sic_enabled;
  j["sending"] = {{"accepted", r.sending.accepted}, {"bypassed", r.sending.bypassed}, {"reason", r.sending.reason}};
  if (r.receiving) {
    const auto& v = r.receiving->verdict;
    json rec;
    rec["spf"] = {{"result", to_string(v.spf.result)},
                  {"identity_domain", v.spf.identity_domain},
                  {"identity_source", to_string(v.spf.identity_source)},
                  {"detail", v.spf.detail}};
    rec["dkim"] = json::array();
    for (const auto& e : v.dkim) {
      rec["dkim"].push_back(
          {{"domain", e.domain}, {"selector", e.selector}, {"result", to_string(e.result)}, {"detail", e.detail}});
    }
    rec["dmarc"] = {{"result", to_string(v.dmarc.result)},
                    {"aligned_via", to_string(v.dmarc.aligned_via)},
                    {"policy_applied", to_string(v.dmarc.policy_applied)},
                    {"from_domain", v.dmarc.from_domain},
                    {"record_domain", v.dmarc.record_domain},
                    {"detail", v.dmarc.detail}};
    if (v.arc) {
      rec["arc"] = {{"chain_valid", v.arc->chain_valid},
                    {"instance_count", v.arc->instance_count},
                    {"claimed_dmarc", v.arc->claimed_dmarc ? json(*v.arc->claimed_dmarc) : json(nullptr)},
                    {"detail", v.arc->detail}};
    }
    rec["effective_dmarc"] = to_string(r.receiving->effective_dmarc);
    rec["arc_override"] = r.receiving->arc_override;
    rec["disposition"] = to_string(r.receiving->disposition);
    rec["reason"] = r.receiving->reason;
    j["receiving"] = rec;
  }
  if (r.forwarding) {
    j["forwarding"] = {{"forwarded", r.forwarding->forwarded},
                       {"dkim_added", r.forwarding->dkim_added},
                       {"arc_added", r.forwarding->arc_added},
                       {"reason", r.forwarding->reason}};
  }
  if (r.rendering) {
    const auto& d = *r.rendering;
    json ren;
    ren["displayed_address"] = d.displayed_address;
    ren["displayed_name"] = d.displayed_name ? json(*d.displayed_name) : json(nullptr);
    ren["alerts"] = json::array();
    for (auto a : d.alerts) ren["alerts"].push_back(to_string(a));
    ren["shown_alerts"] = json::array();
    for (auto a : d.shown_alerts) ren["shown_alerts"].push_back(to_string(a));
    ren["trace"] = json::array();
    for (const auto& t : d.extraction_trace) ren["trace"].push_back({t.step, t.input, t.output});
    j["rendering"] = ren;
  }
  j["stopped_at"] = r.stopped_at ? json(to_string(*r.stopped_at)) : json(nullptr);
  j["stop_reason"] = r.stop_reason;
  j["success"] = r.success;
  return j;
}

ChainReport report_from(const json& j) {
  ChainReport r;
  r.case_id = j.at("case_id").get<std::string>();
  for (const auto& id : j.at("ids")) r.ids.push_back(id_named(id));
  r.scenario = j.at("scenario").get<std::string>();
  r.hop = j.at("hop").get<std::string>();
  r.profile_name = j.at("profile").get<std::string>();
  r.spoof_identity = j.at("spoof_identity").get<std::string>();
  r.sic_enabled = j.value("sic_enabled", false);
  const auto& s = j.at("sending");
  r.sending = {s.at("accepted").get<bool>(), s.at("bypassed").get<bool>(), s.at("reason").get<std::string>()};
  if (j.contains("receiving")) {
    const auto& rec = j.at("receiving");
    ReceivingOutcome out;
    auto& v = out.verdict;
    const auto& spf = rec.at("spf");
    v.spf.result = enum_named(spf.at("result"), kSpf, "spf");
    v.spf.identity_domain = spf.at("identity_domain").get<std::string>();
    v.spf.identity_source = enum_named(spf.at("identity_source"), kSource, "identity_source");
    v.spf.detail = spf.at("detail").get<std::string>();
    for (const auto& e : rec.at("dkim")) {
      v.dkim.push_back({e.at("domain").get<std::string>(), e.at("selector").get<std::string>(),
                        enum_named(e.at("result"), kDkim, "dkim"), e.at("detail").get<std::string>()});
    }
    const auto& d = rec.at("dmarc");
    v.dmarc.result = enum_named(d.at("result"), kDmarc, "dmarc");
    v.dmarc.aligned_via = enum_named(d.at("aligned_via"), kVia, "aligned_via");
    v.dmarc.policy_applied = enum_named(d.at("policy_applied"), kPolicy, "policy_applied");
    v.dmarc.from_domain = d.at("from_domain").get<std::string>();
    v.dmarc.record_domain = d.at("record_domain").get<std::string>();
    v.dmarc.detail = d.at("detail").get<std::string>();
    if (rec.contains("arc")) {
      const auto& a = rec.at("arc");
      ArcVerdict arc;
      arc.chain_valid = a.at("chain_valid").get<bool>();
      arc.instance_count = a.at("instance_count").get<int>();
      if (!a.at("claimed_dmarc").is_null()) arc.claimed_dmarc = a.at("claimed_dmarc").get<std::string>();
      arc.detail = a.at("detail").get<std::string>();
      v.arc = arc;
    }
    out.effective_dmarc = enum_named(rec.at("effective_dmarc"), kDmarc, "effective_dmarc");
    out.arc_override = rec.at("arc_override").get<bool>();
    out.disposition = enum_named(rec.at("disposition"), kDisposition, "disposition");
    out.reason = rec.at("reason").get<std::string>();
    r.receiving = out;
  }
  if (j.contains("forwarding")) {
    const auto& f = j.at("forwarding");
    r.forwarding = ForwardingOutcome{f.at("forwarded").get<bool>(), f.at("dkim_added").get<bool>(),
                                     f.at("arc_added").get<bool>(), f.at("reason").get<std::string>()};
  }
  if (j.contains("rendering")) {
    const auto& ren = j.at("rendering");
    RenderDecision d;
    d.displayed_address = ren.at("displayed_address").get<std::string>();
    if (!ren.at("displayed_name").is_null()) d.displayed_name = ren.at("displayed_name").get<std::string>();
    for (const auto& a : ren.at("alerts")) d.alerts.insert(parse_alert(a.get<std::string>()));
    for (const auto& a : ren.at("shown_alerts")) d.shown_alerts.insert(parse_alert(a.get<std::string>()));
    for (const auto& t : ren.at("trace")) {
      d.extraction_trace.push_back({t.at(0).get<std::string>(), t.at(1).get<std::string>(), t.at(2).get<std::string>()});
    }
    r.rendering = d;
  }
  if (!j.at("stopped_at").is_null()) r.stopped_at = enum_named(j.at("stopped_at"), kStages, "stopped_at");
  r.stop_reason = j.at("stop_reason").get<std::string>();
  r.success = j.at("success").get<bool>();
  return r;
}

json transcript_json(const Transcript& t) {
  return {{"protocol", t.protocol}, {"target", t.target}, {"case_id", t.case_id}, {"text", t.to_text()}};
}

json reports_body(const std::vector<ChainReport>& reports, const std::vector<Transcript>& transcripts) {
  json j;
  j["schema_version"] = 1;
  j["reports"] = json::array();
  for (const auto& r : reports) j["reports"].push_back(report_json(r));
  j["transcripts"] = json::array();
  for (const auto& t : transcripts) j["transcripts"].push_back(transcript_json(t));
  return j;
}

}  // namespace

std::string reports_to_json(const std::vector<ChainReport>& reports, const std::vector<Transcript>& transcripts) {
  return dump(reports_body(reports, transcripts));
}

std::vector<ChainReport> reports_from_json(std::string_view text) {
  try {
    auto j = json::parse(text);
    if (j.value("schema_version", 0) != 1) throw Error(ErrorCode::config, "report: unsupported schema_version");
    std::vector<ChainReport> out;
    for (const auto& r : j.at("reports")) out.push_back(report_from(r));
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config, std::string("report: ") + e.what());
  }
}

std::string report_document(const std::vector<ChainReport>& reports, const std::vector<Transcript>& transcripts) {
  auto j = reports_body(reports, transcripts);
  j["matrix"] = matrix_json(aggregate(reports));
  j["advisories"] = json::array();
  for (const auto& r : reports) {
    auto adv = advise(r);
    if (adv.empty()) continue;
    j["advisories"].push_back({{"case_id", r.case_id}, {"scenario", r.scenario}, {"advice", adv}});
  }
  return dump(j);
}

// ---- advice

std::vector<std::string> advise(const ChainReport& report) {
  if (!report.success) return {};
  static const std::map<AttackId, std::string> advice{
      {AttackId::A1, "Sending: reject submissions whose MAIL FROM differs from the authenticated account."},
      {AttackId::A2, "Sending: require the From header to match the authenticated MAIL FROM, not merely contain it."},
      {AttackId::A3, "Receiving: evaluate SPF against the HELO identity when MAIL FROM is empty."},
      {AttackId::A4, "Receiving: reject messages carrying more than one From header, including case and whitespace "
                     "variants of the name."},
      {AttackId::A5, "Receiving: reject a From header listing several mailboxes unless a Sender header is present."},
      {AttackId::A6, "Receiving and UI: parse From addresses strictly and identically; reject routes, comments, null "
                     "members and truncating characters."},
      {AttackId::A7, "Receiving: decode encoded-words before extracting the domain that DMARC verifies."},
      {AttackId::A8, "Receiving: apply the organizational domain's DMARC policy to subdomains without a record."},
      {AttackId::A9, "Forwarding: confirm ownership of a forward target before forwarding mail to it."},
      {AttackId::A10, "Forwarding: do not add DKIM signatures to mail that never passed DKIM verification."},
      {AttackId::A11, "Forwarding: record real verification results in ARC headers; receivers should only honor "
                      "ARC from sealers they trust."},
      {AttackId::A12, "UI: raise a homograph warning for IDN domains confusable with well-known domains, and show "
                      "them in punycode or with the lookalike characters marked."},
      {AttackId::A13, "UI: display the address the server authenticated; never drop characters from a sender "
                      "address."},
      {AttackId::A14, "UI: strip or flag bidirectional override characters in sender addresses."},
  };
  std::vector<std::string> out;
  for (auto id : report.ids) {
    const auto& a = advice.at(id);
    if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
  }
  if (!report.sic_enabled) {
    out.push_back("UI: show a sender inconsistency notice when the envelope and From domains differ.");
  }
  return out;
}

}  // namespace spoofchain
