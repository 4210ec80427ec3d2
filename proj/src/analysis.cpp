#include "xqm/analysis.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "xqm/error.hpp"
#include "xqm/io.hpp"

namespace xqm {

double compensated_sum(std::span<const double> values) {
  // Neumaier's variant of Kahan summation.
  double sum = 0.0;
  double comp = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

double mean(std::span<const double> values) {
  if (values.empty()) throw DomainError("mean of an empty sequence");
  return compensated_sum(values) / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) throw DomainError("sample variance needs at least two values");
  const double m = mean(values);
  std::vector<double> sq;
  sq.reserve(values.size());
  for (double v : values) sq.push_back((v - m) * (v - m));
  return compensated_sum(sq) / static_cast<double>(values.size() - 1);
}

double sample_std(std::span<const double> values) { return std::sqrt(sample_variance(values)); }

namespace {

// Counts inversions while merge-sorting `v` in place.
std::int64_t count_inversions(std::vector<double>& v) {
  std::vector<double> buf(v.size());
  std::int64_t inversions = 0;
  for (std::size_t width = 1; width < v.size(); width *= 2) {
    for (std::size_t lo = 0; lo < v.size(); lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, v.size());
      const std::size_t hi = std::min(lo + 2 * width, v.size());
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (v[j] < v[i]) {
          inversions += static_cast<std::int64_t>(mid - i);
          buf[k++] = v[j++];
        } else {
          buf[k++] = v[i++];
        }
      }
      while (i < mid) buf[k++] = v[i++];
      while (j < hi) buf[k++] = v[j++];
    }
    std::swap(v, buf);
  }
  return inversions;
}

// Number of pairs inside runs of equal adjacent values.
template <typename Eq>
std::int64_t tied_pairs(std::size_t n, Eq&& equal_to_prev) {
  std::int64_t pairs = 0;
  std::int64_t run = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i < n && equal_to_prev(i)) {
      ++run;
    } else {
      pairs += run * (run - 1) / 2;
      run = 1;
    }
  }
  return pairs;
}

}  // namespace

double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw DomainError("kendall_tau_b: length mismatch (" + std::to_string(x.size()) + " vs " +
                      std::to_string(y.size()) + ")");
  }
  const std::size_t n = x.size();
  if (n < 2) throw DomainError("kendall_tau_b needs at least two observations");
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isnan(x[i]) || std::isnan(y[i])) throw DomainError("kendall_tau_b: NaN input");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  const auto n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const auto n1 = tied_pairs(n, [&](std::size_t i) { return x[order[i]] == x[order[i - 1]]; });
  const auto n3 = tied_pairs(n, [&](std::size_t i) {
    return x[order[i]] == x[order[i - 1]] && y[order[i]] == y[order[i - 1]];
  });
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  const auto discordant = count_inversions(ys);  // ys is now sorted
  const auto n2 = tied_pairs(n, [&](std::size_t i) { return ys[i] == ys[i - 1]; });

  const std::int64_t concordant_minus_discordant = n0 - n1 - n2 + n3 - 2 * discordant;
  const std::int64_t untied_y = n0 - n2;  // C + D + Tx
  const std::int64_t untied_x = n0 - n1;  // C + D + Ty
  if (untied_x == 0 || untied_y == 0) {
    throw UndefinedCorrelationError("kendall_tau_b undefined: an input vector is constant");
  }
  return static_cast<double>(concordant_minus_discordant) /
         std::sqrt(static_cast<double>(untied_y) * static_cast<double>(untied_x));
}

double coefficient_of_variation(std::span<const double> values) {
  if (values.size() < 2) throw DomainError("coefficient of variation needs at least two values");
  const double m = mean(values);
  if (m == 0.0) throw DomainError("coefficient of variation undefined for zero mean");
  return 100.0 * sample_std(values) / std::abs(m);
}

LgnFit lgn_fit(const ScoreMatrix& matrix, std::string_view metric, const TripletPool& pool,
               const LgnPlan& plan) {
  if (plan.per_level_n < 1 || plan.repeats < 1 || plan.levels.empty()) {
    throw ConfigError("LGN plan needs per_level_n >= 1, repeats >= 1 and at least one level");
  }
  const auto col = matrix.column_index(metric);
  const auto& dir = pool.direction();
  for (int level : plan.levels) {
    const auto have = pool.count_at(level);
    if (have == 0 || (!plan.with_replacement &&
                      have < static_cast<std::size_t>(plan.per_level_n))) {
      throw CapacityError("LGN fit for " + dir.str() + ": level " + std::to_string(level) +
                          " has " + std::to_string(have) + " triplets, need " +
                          std::to_string(plan.per_level_n));
    }
  }

  LgnFit fit;
  std::vector<double> mus, sigmas;
  for (int r = 0; r < plan.repeats; ++r) {
    LgnSample sample;
    sample.repeat = r;
    std::vector<double> pooled;
    for (int level : plan.levels) {
      const auto& indices = pool.by_level().at(level);
      Rng rng(derive_seed(plan.seed, {fnv1a64("lgn"), fnv1a64(dir.str()),
                                      static_cast<std::uint64_t>(level),
                                      static_cast<std::uint64_t>(r)}));
      for (auto pick : sample_indices(rng, indices.size(),
                                      static_cast<std::size_t>(plan.per_level_n),
                                      plan.with_replacement)) {
        const auto& t = pool.at(indices[pick]);
        const auto v = matrix.cell(matrix.row_index(t.triplet_id), col);
        if (!v) {
          throw CoverageError("missing " + std::string(metric) + " score for triplet '" +
                              t.triplet_id + "'");
        }
        pooled.push_back(*v);
        sample.triplet_ids.push_back(t.triplet_id);
      }
    }
    sample.mu = mean(pooled);
    sample.sigma = pooled.size() >= 2 ? sample_std(pooled) : 0.0;
    if (!(sample.sigma > 0.0)) {
      throw DegenerateCalibrationError("LGN fit for " + std::string(metric) + " on " + dir.str() +
                                       ": pooled scores are constant (sigma = 0) in repeat " +
                                       std::to_string(r));
    }
    mus.push_back(sample.mu);
    sigmas.push_back(sample.sigma);
    fit.samples.push_back(std::move(sample));
  }
  fit.stats.metric = std::string(metric);
  fit.stats.direction = dir;
  fit.stats.mu = mean(mus);
  fit.stats.sigma = mean(sigmas);
  fit.stats.n_pooled = plan.repeats * static_cast<int>(plan.levels.size()) * plan.per_level_n;
  fit.stats.repeats = plan.repeats;
  fit.stats.seed = plan.seed;
  return fit;
}

double lgn_apply(double score, const CalibrationStats& stats) {
  if (!(stats.sigma > 0.0)) {
    throw CalibrationError("calibration for " + stats.metric + " on " + stats.direction.str() +
                           " has non-positive sigma");
  }
  return (score - stats.mu) / stats.sigma;
}

std::string write_calibration_tsv(const CalibrationTable& table) {
  std::string out = "metric\tdirection\tmu\tsigma\tn_pooled\trepeats\tseed\n";
  for (const auto& [key, s] : table) {
    out += s.metric + '\t' + s.direction.str() + '\t' + io::format_double(s.mu) + '\t' +
           io::format_double(s.sigma) + '\t' + std::to_string(s.n_pooled) + '\t' +
           std::to_string(s.repeats) + '\t' + std::to_string(s.seed) + '\n';
  }
  return out;
}

CalibrationTable parse_calibration_tsv(std::string_view text, std::string_view source_name) {
  const auto table = io::parse_tsv(
      text, {"metric", "direction", "mu", "sigma", "n_pooled", "repeats", "seed"}, source_name);
  CalibrationTable out;
  for (const auto& row : table.rows) {
    const auto where = std::string(source_name) + ":" + std::to_string(row.line);
    CalibrationStats s;
    s.metric = row.fields[0];
    s.direction = Direction::parse(row.fields[1]);
    s.mu = io::parse_double(row.fields[2], "mu");
    s.sigma = io::parse_double(row.fields[3], "sigma");
    try {
      s.n_pooled = std::stoi(row.fields[4]);
      s.repeats = std::stoi(row.fields[5]);
      s.seed = std::stoull(row.fields[6]);
    } catch (const std::exception&) {
      throw ParseError(where + ": malformed integer field");
    }
    if (!(s.sigma > 0.0)) throw CalibrationError(where + ": sigma must be > 0");
    if (!out.emplace(std::make_pair(s.metric, s.direction), s).second) {
      throw IntegrityError(where + ": duplicate calibration for " + s.metric + " " +
                           s.direction.str());
    }
  }
  return out;
}

SystemEvaluation evaluate_average_strategy(const PseudoSystem& system, const ScoreMatrix& matrix,
                                           std::string_view metric, bool use_lgn,
                                           const CalibrationTable& stats) {
  if (system.members.empty()) throw DomainError("system '" + system.system_id + "' is empty");
  const auto col = matrix.column_index(metric);
  SystemEvaluation eval;
  eval.system_id = system.system_id;
  eval.repeat_index = system.repeat_index;
  eval.lgn_applied = use_lgn;

  std::vector<double> direction_means;
  for (const auto& m : system.members) {
    const CalibrationStats* cal = nullptr;
    if (use_lgn) {
      const auto it = stats.find({std::string(metric), m.direction});
      if (it == stats.end()) {
        throw CalibrationError("no LGN calibration for " + std::string(metric) + " on " +
                               m.direction.str());
      }
      cal = &it->second;
    }
    std::vector<double> scores;
    scores.reserve(m.triplet_ids.size());
    for (const auto& id : m.triplet_ids) {
      const auto row = matrix.row_index(id);
      if (matrix.rows()[row].direction != m.direction) {
        throw IntegrityError("triplet '" + id + "' is scored as " +
                             matrix.rows()[row].direction.str() + ", listed under " +
                             m.direction.str());
      }
      const auto v = matrix.cell(row, col);
      if (!v) {
        throw CoverageError("missing " + std::string(metric) + " score for triplet '" + id + "'");
      }
      scores.push_back(cal ? lgn_apply(*v, *cal) : *v);
    }
    const double dir_mean = mean(scores);
    eval.per_direction_metric_means[m.direction] = dir_mean;
    direction_means.push_back(dir_mean);
  }
  eval.s_m = mean(direction_means);
  eval.s_h = human_score_of(system.members);
  return eval;
}

std::string_view to_string(Granularity g) {
  return g == Granularity::System ? "system" : "triplet";
}

CorrelationReport system_level_correlation(const std::vector<SystemEvaluation>& evaluations,
                                           std::string_view metric, int num_languages) {
  std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_repeat;
  bool lgn = false;
  for (const auto& e : evaluations) {
    auto& [sm, sh] = by_repeat[e.repeat_index];
    sm.push_back(e.s_m);
    sh.push_back(e.s_h);
    lgn = lgn || e.lgn_applied;
  }
  if (by_repeat.empty()) throw DomainError("no system evaluations to correlate");
  CorrelationReport report;
  report.metric = std::string(metric);
  report.granularity = Granularity::System;
  report.num_languages = num_languages;
  report.lgn_applied = lgn;
  for (const auto& [repeat, vectors] : by_repeat) {
    if (vectors.first.size() < 2) {
      throw DomainError("repeat " + std::to_string(repeat) + " has fewer than two systems");
    }
    report.per_repeat_taus.push_back(kendall_tau_b(vectors.first, vectors.second));
  }
  report.repeats = static_cast<int>(report.per_repeat_taus.size());
  report.tau = mean(report.per_repeat_taus);
  return report;
}

double triplet_level_tau(const ScoreMatrix& matrix, std::string_view metric,
                         const std::vector<std::string>& triplet_ids, bool use_lgn,
                         const CalibrationTable& stats) {
  const auto col = matrix.column_index(metric);
  std::vector<double> scores, quality;
  scores.reserve(triplet_ids.size());
  quality.reserve(triplet_ids.size());
  for (const auto& id : triplet_ids) {
    const auto row = matrix.row_index(id);
    const auto& meta = matrix.rows()[row];
    const auto v = matrix.cell(row, col);
    if (!v) {
      throw CoverageError("missing " + std::string(metric) + " score for triplet '" + id + "'");
    }
    double s = *v;
    if (use_lgn) {
      const auto it = stats.find({std::string(metric), meta.direction});
      if (it == stats.end()) {
        throw CalibrationError("no LGN calibration for " + std::string(metric) + " on " +
                               meta.direction.str());
      }
      s = lgn_apply(s, it->second);
    }
    scores.push_back(s);
    quality.push_back(-static_cast<double>(mqm_deduction(meta.level)));
  }
  return kendall_tau_b(scores, quality);
}

CorrelationReport triplet_level_correlation(const ScoreMatrix& matrix, std::string_view metric,
                                            const std::vector<std::vector<std::string>>& groups,
                                            bool use_lgn, const CalibrationTable& stats) {
  if (groups.empty()) throw DomainError("no triplet groups to correlate");
  CorrelationReport report;
  report.metric = std::string(metric);
  report.granularity = Granularity::Triplet;
  report.lgn_applied = use_lgn;
  std::map<Direction, bool> directions;
  for (const auto& ids : groups) {
    for (const auto& id : ids) directions[matrix.rows()[matrix.row_index(id)].direction] = true;
    report.per_repeat_taus.push_back(triplet_level_tau(matrix, metric, ids, use_lgn, stats));
  }
  report.num_languages = static_cast<int>(directions.size());
  report.repeats = static_cast<int>(report.per_repeat_taus.size());
  report.tau = mean(report.per_repeat_taus);
  return report;
}

namespace {

// S_M of each monolingual system at `level`, grouped by direction in repeat order.
std::map<Direction, std::vector<std::pair<int, double>>> monolingual_scores(
    const std::vector<PseudoSystem>& systems, const std::vector<SystemEvaluation>& evaluations,
    int level) {
  if (systems.size() != evaluations.size()) {
    throw DomainError("systems and evaluations differ in length");
  }
  std::map<Direction, std::vector<std::pair<int, double>>> out;
  for (std::size_t i = 0; i < systems.size(); ++i) {
    const auto& s = systems[i];
    if (s.system_id != evaluations[i].system_id) {
      throw IntegrityError("evaluation " + evaluations[i].system_id + " does not match system " +
                           s.system_id);
    }
    if (!s.level || s.members.size() != 1) {
      throw DomainError("system '" + s.system_id + "' is not monolingual");
    }
    if (*s.level != level) continue;
    out[s.members.front().direction].emplace_back(s.repeat_index, evaluations[i].s_m);
  }
  for (auto& [_, v] : out) std::sort(v.begin(), v.end());
  return out;
}

}  // namespace

CvReport cross_lingual_cv(const std::vector<PseudoSystem>& systems,
                          const std::vector<SystemEvaluation>& evaluations,
                          std::string_view metric, int level) {
  const auto grouped = monolingual_scores(systems, evaluations, level);
  if (grouped.size() < 2) {
    throw DomainError("cross-lingual CV at level " + std::to_string(level) +
                      " needs at least two directions");
  }
  CvReport report;
  report.metric = std::string(metric);
  report.level = level;
  std::vector<double> means;
  for (const auto& [dir, scores] : grouped) {
    std::vector<double> v;
    for (const auto& [_, s] : scores) v.push_back(s);
    report.per_direction_means[dir] = mean(v);
    means.push_back(report.per_direction_means[dir]);
  }
  report.cv_percent = coefficient_of_variation(means);
  return report;
}

double student_t_two_tailed(double t, double df) {
  if (!(df > 0.0)) throw DomainError("degrees of freedom must be > 0");
  if (std::isinf(t)) return 0.0;
  const double x = df / (df + t * t);
  return boost::math::ibeta(df / 2.0, 0.5, x);
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("paired_t_test: length mismatch");
  if (a.size() < 2) throw DomainError("paired_t_test needs at least two pairs");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  TTestResult r;
  r.df = static_cast<int>(d.size()) - 1;
  if (std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; })) {
    r.t = 0.0;
    r.p_two_tailed = 1.0;
    return r;
  }
  const double m = mean(d);
  const double sd = sample_std(d);
  if (sd == 0.0) {
    r.t = m > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  } else {
    r.t = m / (sd / std::sqrt(static_cast<double>(d.size())));
  }
  const double p = student_t_two_tailed(r.t, r.df);
  r.p_two_tailed = std::clamp(p, std::numeric_limits<double>::denorm_min(), 1.0);
  return r;
}

std::vector<StabilityRow> repeat_stability(const std::vector<PseudoSystem>& systems,
                                           const std::vector<SystemEvaluation>& evaluations,
                                           std::string_view metric,
                                           const std::vector<int>& repeat_counts) {
  std::set<int> levels;
  for (const auto& s : systems) {
    if (s.level) levels.insert(*s.level);
  }
  std::vector<StabilityRow> rows;
  for (int level : levels) {
    for (const auto& [dir, scores] : monolingual_scores(systems, evaluations, level)) {
      for (int count : repeat_counts) {
        if (count < 1 || static_cast<std::size_t>(count) > scores.size()) {
          throw ConfigError("stability needs " + std::to_string(count) + " repeats, only " +
                            std::to_string(scores.size()) + " available for " + dir.str() +
                            " level " + std::to_string(level));
        }
        std::vector<double> v;
        for (int i = 0; i < count; ++i) v.push_back(scores[static_cast<std::size_t>(i)].second);
        StabilityRow row;
        row.metric = std::string(metric);
        row.direction = dir;
        row.level = level;
        row.repeats = count;
        row.mean = mean(v);
        row.variance = count >= 2 ? sample_variance(v) : 0.0;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

}  // namespace xqm
