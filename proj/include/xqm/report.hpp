#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "xqm/analysis.hpp"

namespace xqm::report {

/// Provenance stamped into every artifact.
struct Meta {
  std::string stage;
  std::string inputs_hash;  // sha256 over stage parameters and input file contents
  std::uint64_t seed = 0;
};

std::string tool_version();

/// "# xqm <version> stage=<stage> inputs=<hash> seed=<seed> rng=<algorithm>"
std::string tsv_meta_line(const Meta& meta);
/// {"meta": {...}} as a single JSON line.
std::string jsonl_meta_line(const Meta& meta);

using Series = std::map<std::string, std::vector<std::pair<int, double>>>;

/// Line chart with one polyline per series (x: quality level).
std::string svg_line_chart(const std::string& title, const std::string& y_label,
                           const Series& series, const Meta& meta);

/// Rows: (num_languages, granularity); columns: metrics. Mirrors the layout
/// of the published correlation tables.
std::string correlation_table(const std::vector<CorrelationReport>& reports, const Meta& meta);

/// Rows: metrics; columns: quality levels; cells: CV in percent.
std::string cv_table(const std::vector<CvReport>& reports, const Meta& meta);

}  // namespace xqm::report
