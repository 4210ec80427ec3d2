#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "xqm/synthesis.hpp"

namespace xqm {

enum class Orientation { HigherBetter, LowerBetter };

std::string_view to_string(Orientation o);

/// Character n-gram F-score settings. word_n = 0 gives chrF, word_n = 2 gives
/// chrF++.
struct ChrfConfig {
  int char_n = 6;
  int word_n = 2;
  double beta = 2.0;

  void validate() const;
  /// e.g. "chrF++(c6,w2,b2)"
  std::string describe() const;
};

struct ExternalCommand {
  std::string command;  // run through /bin/sh -c
  double timeout_s = 600.0;
};

struct MetricSpec {
  std::string name;
  Orientation orientation = Orientation::HigherBetter;
  std::variant<ChrfConfig, ExternalCommand> kind;
  bool needs_reference = true;

  bool is_builtin() const { return std::holds_alternative<ChrfConfig>(kind); }
  void validate() const;
  double orient(double raw) const { return orientation == Orientation::LowerBetter ? -raw : raw; }
};

struct ScoreRecord {
  std::string triplet_id;
  std::string metric;
  double raw_score = 0.0;
  double oriented_score = 0.0;
};

/// chrF in [0, 100]. Precision and recall are averaged uniformly over the
/// character orders 1..char_n (whitespace removed) and the word orders
/// 1..word_n (whitespace tokens), then combined as F_beta. Orders with no
/// n-grams in either string are left out of the average; if every order is
/// left out the score is 0.
double chrf_score(std::string_view hypothesis, std::string_view reference,
                  const ChrfConfig& config = {});

/// Streams one JSON request per triplet to the scorer's stdin and reads one
/// JSON response per request from its stdout. Throws ScorerError (non-zero
/// exit, spawn failure), ProtocolError (bad/missing/duplicate/unknown ids or
/// unparsable lines) or TimeoutError.
std::vector<ScoreRecord> run_external_scorer(const MetricSpec& spec,
                                             const std::vector<const Triplet*>& triplets);

/// Oriented scores for triplets x metrics. Missing cells are explicit.
class ScoreMatrix {
 public:
  struct Row {
    std::string triplet_id;
    Direction direction;
    int level = 0;
  };

  ScoreMatrix() = default;
  ScoreMatrix(std::vector<Row> rows, std::vector<std::string> metrics);

  const std::vector<Row>& rows() const { return rows_; }
  const std::vector<std::string>& metrics() const { return metrics_; }

  void set(std::string_view triplet_id, std::string_view metric, double oriented);
  std::optional<double> get(std::string_view triplet_id, std::string_view metric) const;
  /// Throws CoverageError naming the triplet if the cell is missing.
  double require(std::string_view triplet_id, std::string_view metric) const;

  std::size_t row_index(std::string_view triplet_id) const;  // throws CoverageError
  std::size_t column_index(std::string_view metric) const;   // throws CoverageError
  std::optional<double> cell(std::size_t row, std::size_t col) const { return cells_[row][col]; }

 private:
  std::vector<Row> rows_;
  std::vector<std::string> metrics_;
  std::vector<std::vector<std::optional<double>>> cells_;
  std::map<std::string, std::size_t, std::less<>> row_index_;
  std::map<std::string, std::size_t, std::less<>> col_index_;
};

struct ScoreFailure {
  std::string metric;
  std::string message;
  std::vector<std::string> missing_ids;
};

struct ScoreRun {
  ScoreMatrix matrix;
  std::vector<ScoreFailure> failures;
};

/// Scores every triplet with every metric. Builtin metrics run in-process on
/// `threads` workers; external metrics run one child per spec. A failing
/// metric leaves its column empty and is listed in `failures`.
ScoreRun score_pool(const std::vector<MetricSpec>& specs,
                    const std::vector<const Triplet*>& triplets, int threads = 1);

std::string write_matrix_tsv(const ScoreMatrix& matrix);
ScoreMatrix parse_matrix_tsv(std::string_view text, std::string_view source_name = "<matrix>");
std::string write_failures_tsv(const std::vector<ScoreFailure>& failures);

/// INI-style registry, one section per metric:
///   [chrf]
///   builtin = chrf
///   char_n = 6
///   word_n = 2
///   beta = 2
///   orientation = higher
///   needs_reference = true
///   [mx]
///   command = python3 shim.py --model metricx
///   orientation = lower
///   timeout_s = 900
std::vector<MetricSpec> parse_metric_registry(std::string_view text);
std::vector<MetricSpec> load_metric_registry(const std::filesystem::path& path);

}  // namespace xqm
