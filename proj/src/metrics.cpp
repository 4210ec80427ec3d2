#include "xqm/metrics.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <set>
#include <sstream>

#include "xqm/error.hpp"
#include "xqm/io.hpp"
#include "xqm/parallel.hpp"

namespace xqm {

std::string_view to_string(Orientation o) {
  return o == Orientation::HigherBetter ? "higher" : "lower";
}

void MetricSpec::validate() const {
  if (name.empty()) throw ConfigError("metric name must be non-empty");
  if (const auto* chrf = std::get_if<ChrfConfig>(&kind)) {
    chrf->validate();
    if (!needs_reference) throw ConfigError("builtin chrF always needs a reference");
  } else {
    const auto& ext = std::get<ExternalCommand>(kind);
    if (ext.command.empty()) throw ConfigError("metric '" + name + "' has an empty command");
    if (!(ext.timeout_s > 0.0)) throw ConfigError("metric '" + name + "' timeout must be > 0");
  }
}

ScoreMatrix::ScoreMatrix(std::vector<Row> rows, std::vector<std::string> metrics)
    : rows_(std::move(rows)), metrics_(std::move(metrics)) {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (!row_index_.emplace(rows_[i].triplet_id, i).second) {
      throw IntegrityError("duplicate matrix row '" + rows_[i].triplet_id + "'");
    }
  }
  for (std::size_t j = 0; j < metrics_.size(); ++j) {
    if (!col_index_.emplace(metrics_[j], j).second) {
      throw ConfigError("duplicate metric column '" + metrics_[j] + "'");
    }
  }
  cells_.assign(rows_.size(), std::vector<std::optional<double>>(metrics_.size()));
}

std::size_t ScoreMatrix::row_index(std::string_view triplet_id) const {
  const auto it = row_index_.find(triplet_id);
  if (it == row_index_.end()) {
    throw CoverageError("no scores for triplet '" + std::string(triplet_id) + "'");
  }
  return it->second;
}

std::size_t ScoreMatrix::column_index(std::string_view metric) const {
  const auto it = col_index_.find(metric);
  if (it == col_index_.end()) {
    throw CoverageError("no scores for metric '" + std::string(metric) + "'");
  }
  return it->second;
}

void ScoreMatrix::set(std::string_view triplet_id, std::string_view metric, double oriented) {
  cells_[row_index(triplet_id)][column_index(metric)] = oriented;
}

std::optional<double> ScoreMatrix::get(std::string_view triplet_id,
                                       std::string_view metric) const {
  const auto r = row_index_.find(triplet_id);
  const auto c = col_index_.find(metric);
  if (r == row_index_.end() || c == col_index_.end()) return std::nullopt;
  return cells_[r->second][c->second];
}

double ScoreMatrix::require(std::string_view triplet_id, std::string_view metric) const {
  const auto v = cells_[row_index(triplet_id)][column_index(metric)];
  if (!v) {
    throw CoverageError("missing " + std::string(metric) + " score for triplet '" +
                        std::string(triplet_id) + "'");
  }
  return *v;
}

ScoreRun score_pool(const std::vector<MetricSpec>& specs,
                    const std::vector<const Triplet*>& triplets, int threads) {
  if (specs.empty()) throw ConfigError("no metrics configured");
  std::vector<std::string> names;
  for (const auto& s : specs) {
    s.validate();
    names.push_back(s.name);
  }
  std::vector<ScoreMatrix::Row> rows;
  rows.reserve(triplets.size());
  for (const auto* t : triplets) {
    rows.push_back({t->triplet_id, t->translation.direction, t->level()});
  }
  ScoreRun run{ScoreMatrix(std::move(rows), names), {}};

  for (const auto& spec : specs) {
    if (const auto* chrf = std::get_if<ChrfConfig>(&spec.kind)) {
      std::vector<double> raw(triplets.size());
      parallel_for(triplets.size(), threads, [&](std::size_t i) {
        raw[i] = chrf_score(triplets[i]->translation.text, triplets[i]->reference, *chrf);
      });
      for (std::size_t i = 0; i < triplets.size(); ++i) {
        run.matrix.set(triplets[i]->triplet_id, spec.name, spec.orient(raw[i]));
      }
      continue;
    }
    if (triplets.empty()) continue;
    try {
      for (const auto& rec : run_external_scorer(spec, triplets)) {
        run.matrix.set(rec.triplet_id, spec.name, rec.oriented_score);
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Scorer) throw;
      ScoreFailure f{spec.name, e.what(), {}};
      for (const auto* t : triplets) f.missing_ids.push_back(t->triplet_id);
      run.failures.push_back(std::move(f));
    }
  }
  return run;
}

std::string write_matrix_tsv(const ScoreMatrix& matrix) {
  std::vector<std::string> header = {"triplet_id", "direction", "level"};
  header.insert(header.end(), matrix.metrics().begin(), matrix.metrics().end());
  std::string out = io::join(header, "\t") + "\n";
  for (std::size_t r = 0; r < matrix.rows().size(); ++r) {
    const auto& row = matrix.rows()[r];
    out += row.triplet_id + '\t' + row.direction.str() + '\t' + std::to_string(row.level);
    for (std::size_t c = 0; c < matrix.metrics().size(); ++c) {
      const auto v = matrix.cell(r, c);
      out += '\t';
      out += v ? io::format_double(*v) : "NA";
    }
    out += '\n';
  }
  return out;
}

ScoreMatrix parse_matrix_tsv(std::string_view text, std::string_view source_name) {
  const auto table = io::parse_tsv_any(text, source_name);
  if (table.header.size() < 3 || table.header[0] != "triplet_id" ||
      table.header[1] != "direction" || table.header[2] != "level") {
    throw ParseError(std::string(source_name) +
                     ": expected header 'triplet_id\\tdirection\\tlevel\\t<metric>...'");
  }
  std::vector<std::string> metrics(table.header.begin() + 3, table.header.end());
  std::vector<ScoreMatrix::Row> rows;
  for (const auto& row : table.rows) {
    int level = 0;
    try {
      level = std::stoi(row.fields[2]);
    } catch (const std::exception&) {
      throw ParseError(std::string(source_name) + ":" + std::to_string(row.line) + ": bad level");
    }
    rows.push_back({row.fields[0], Direction::parse(row.fields[1]), level});
  }
  ScoreMatrix m(std::move(rows), metrics);
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < metrics.size(); ++c) {
      const auto& cell = row.fields[3 + c];
      if (cell == "NA") continue;
      m.set(row.fields[0], metrics[c], io::parse_double(cell, metrics[c]));
    }
  }
  return m;
}

std::string write_failures_tsv(const std::vector<ScoreFailure>& failures) {
  std::string out = "metric\tmissing\terror\n";
  for (const auto& f : failures) {
    out += f.metric + '\t' + std::to_string(f.missing_ids.size()) + '\t' +
           io::tsv_cell(f.message) + '\n';
  }
  return out;
}

std::vector<MetricSpec> parse_metric_registry(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("metric registry: ") + e.what());
  }
  static const std::set<std::string> kKeys = {"name",   "orientation", "command",
                                              "builtin", "char_n",      "word_n",
                                              "beta",    "needs_reference", "timeout_s"};
  std::vector<MetricSpec> specs;
  std::set<std::string> names;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("metric registry: '" + section + "' is not a section");
    for (const auto& [key, _] : body) {
      if (!kKeys.count(key)) {
        throw ConfigError("metric registry [" + section + "]: unknown key '" + key + "'");
      }
    }
    MetricSpec spec;
    spec.name = body.get<std::string>("name", section);
    const auto orientation = body.get<std::string>("orientation", "higher");
    if (orientation == "higher") {
      spec.orientation = Orientation::HigherBetter;
    } else if (orientation == "lower") {
      spec.orientation = Orientation::LowerBetter;
    } else {
      throw ConfigError("metric registry [" + section + "]: orientation must be higher|lower");
    }
    const bool has_builtin = body.count("builtin") > 0;
    const bool has_command = body.count("command") > 0;
    if (has_builtin == has_command) {
      throw ConfigError("metric registry [" + section +
                        "]: exactly one of 'builtin' or 'command' is required");
    }
    try {
      spec.needs_reference = body.get<bool>("needs_reference", true);
      if (has_builtin) {
        if (body.get<std::string>("builtin") != "chrf") {
          throw ConfigError("metric registry [" + section + "]: only builtin=chrf is supported");
        }
        ChrfConfig cfg;
        cfg.char_n = body.get<int>("char_n", cfg.char_n);
        cfg.word_n = body.get<int>("word_n", cfg.word_n);
        cfg.beta = body.get<double>("beta", cfg.beta);
        spec.kind = cfg;
      } else {
        ExternalCommand ext;
        ext.command = body.get<std::string>("command");
        ext.timeout_s = body.get<double>("timeout_s", ext.timeout_s);
        spec.kind = ext;
      }
    } catch (const pt::ptree_bad_data& e) {
      throw ConfigError("metric registry [" + section + "]: " + e.what());
    }
    spec.validate();
    if (!names.insert(spec.name).second) {
      throw ConfigError("metric registry: duplicate metric '" + spec.name + "'");
    }
    specs.push_back(std::move(spec));
  }
  if (specs.empty()) throw ConfigError("metric registry defines no metrics");
  return specs;
}

std::vector<MetricSpec> load_metric_registry(const std::filesystem::path& path) {
  return parse_metric_registry(io::read_file(path));
}

}  // namespace xqm
