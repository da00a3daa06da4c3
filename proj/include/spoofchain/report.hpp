#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "spoofchain/live.hpp"
#include "spoofchain/simulator.hpp"

namespace spoofchain {

struct Deployment {
  bool spf = false;
  bool dkim = false;
  bool dmarc = false;
  bool sic = false;
  friend bool operator==(const Deployment&, const Deployment&) = default;
};

struct MatrixRow {
  std::string name;
  std::map<Stage, std::vector<AttackId>> cells;  // every stage present, ids sorted
  Deployment deployment;
  friend bool operator==(const MatrixRow&, const MatrixRow&) = default;
};

struct ResultMatrix {
  std::vector<MatrixRow> rows;  // sorted by name
  friend bool operator==(const ResultMatrix&, const ResultMatrix&) = default;
};

std::string_view stage_title(Stage s);  // "Sending", ..., "UI Rendering"

// Stage an id is credited to in a successful report: its home stage, or the
// next stage the chain went through when the home stage was skipped.
Stage attributed_stage(AttackId id, const ChainReport& report);

// Rows are the final-hop profiles; forwarder hops only mark deployment.
ResultMatrix aggregate(const std::vector<ChainReport>& reports);

enum class ReportFormat { json, text };
std::string emit(const ResultMatrix& matrix, ReportFormat format);
ResultMatrix parse_matrix_json(std::string_view json);

// Full report documents: schema_version 1, the chain reports, optional live
// transcripts, the matrix and advisories.
std::string reports_to_json(const std::vector<ChainReport>& reports,
                            const std::vector<Transcript>& transcripts = {});
std::vector<ChainReport> reports_from_json(std::string_view json);
std::string report_document(const std::vector<ChainReport>& reports,
                            const std::vector<Transcript>& transcripts = {});

// Mitigations for what made the report's attack work; empty when it failed.
std::vector<std::string> advise(const ChainReport& report);

}  // namespace spoofchain
