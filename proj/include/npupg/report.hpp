#pragma once
// Result serialization: one JSON document per run and flat CSV rows for
// sweep aggregation. Output is deterministic: identical reports serialize to
// identical bytes, so golden files and cross-run diffs are meaningful.

#include <string>
#include <vector>

#include <json.hpp>

#include "npupg/sim_core.hpp"

namespace npupg {

// Bumped whenever a field is added, renamed, or re-scaled.
constexpr int kReportSchemaVersion = 1;

nlohmann::ordered_json report_to_json(const SimReport& r);
std::string report_json_text(const SimReport& r);  // dump with trailing newline

// CSV rows carry their full parameter tuple: the caller prepends key columns
// (chip, workload, axis values) so no row depends on ambient state. Headers
// take the matching comma-joined key column names.
std::string report_csv_header(const std::string& key_header);
std::string report_csv_row(const std::string& key_prefix, const SimReport& r);

std::string comparison_csv_header(const std::string& key_header);
std::string comparison_csv_row(const std::string& key_prefix, const PolicyComparison& c);

// Per-component utilization and energy-share table backing the analyze
// command: one row per component plus the utilization scalars.
nlohmann::ordered_json analysis_to_json(const SimReport& r);

}  // namespace npupg
