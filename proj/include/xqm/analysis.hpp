#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xqm/assembly.hpp"
#include "xqm/metrics.hpp"

namespace xqm {

// --- basic reductions (compensated, so results do not depend on grouping) ---

double compensated_sum(std::span<const double> values);
double mean(std::span<const double> values);
/// Sample variance and standard deviation (n - 1 denominator). Require n >= 2.
double sample_variance(std::span<const double> values);
double sample_std(std::span<const double> values);

/// Kendall tau-b over all pairs:
///   (C - D) / sqrt((C + D + Tx) * (C + D + Ty))
/// where Tx and Ty count pairs tied only in x or only in y. O(n log n).
/// Throws DomainError for mismatched lengths or n < 2, and
/// UndefinedCorrelationError when either vector is constant.
double kendall_tau_b(std::span<const double> x, std::span<const double> y);

/// 100 * sample std / |mean|.
double coefficient_of_variation(std::span<const double> values);

struct CalibrationStats {
  std::string metric;
  Direction direction;
  double mu = 0.0;
  double sigma = 1.0;
  int n_pooled = 0;
  int repeats = 0;
  std::uint64_t seed = 0;
};

struct LgnPlan {
  int per_level_n = 102;
  int repeats = 10;
  std::uint64_t seed = 0;
  bool with_replacement = false;
  std::vector<int> levels = {0, 1, 2, 3, 4, 5};
};

/// Triplet ids pooled in one repeat of an LGN fit.
struct LgnSample {
  int repeat = 0;
  std::vector<std::string> triplet_ids;
  double mu = 0.0;
  double sigma = 0.0;
};

struct LgnFit {
  CalibrationStats stats;
  std::vector<LgnSample> samples;
};

/// Per repeat, draws per_level_n triplets at each level from `pool`, pools the
/// oriented `metric` scores and takes their mean and sample std; mu and sigma
/// are the averages over repeats. Samples depend on (seed, direction, level,
/// repeat) only, so every metric sees the same triplets.
LgnFit lgn_fit(const ScoreMatrix& matrix, std::string_view metric, const TripletPool& pool,
               const LgnPlan& plan);

/// z = (score - mu) / sigma
double lgn_apply(double score, const CalibrationStats& stats);

using CalibrationTable = std::map<std::pair<std::string, Direction>, CalibrationStats>;

std::string write_calibration_tsv(const CalibrationTable& table);
CalibrationTable parse_calibration_tsv(std::string_view text,
                                       std::string_view source_name = "<calibration>");

struct SystemEvaluation {
  std::string system_id;
  int repeat_index = 0;
  std::map<Direction, double> per_direction_metric_means;
  double s_m = 0.0;  // metric score: mean of per-direction means
  double s_h = 0.0;  // human score, same aggregation over -deduction
  bool lgn_applied = false;
};

/// Average strategy: per-triplet oriented scores (z-normalised with the
/// direction's stats when use_lgn), averaged per direction, then across
/// directions.
SystemEvaluation evaluate_average_strategy(const PseudoSystem& system, const ScoreMatrix& matrix,
                                           std::string_view metric, bool use_lgn,
                                           const CalibrationTable& stats);

enum class Granularity { System, Triplet };
std::string_view to_string(Granularity g);

struct CorrelationReport {
  std::string metric;
  Granularity granularity = Granularity::System;
  int num_languages = 0;
  double tau = 0.0;  // mean of per_repeat_taus
  int repeats = 0;
  std::vector<double> per_repeat_taus;
  bool lgn_applied = false;
};

/// Kendall tau-b between S_M and S_H across the systems of each repeat,
/// averaged over repeats.
CorrelationReport system_level_correlation(const std::vector<SystemEvaluation>& evaluations,
                                           std::string_view metric, int num_languages);

/// Kendall tau-b between per-triplet scores and signed quality (-5k), pooled
/// across every direction present in `triplet_ids`.
double triplet_level_tau(const ScoreMatrix& matrix, std::string_view metric,
                         const std::vector<std::string>& triplet_ids, bool use_lgn,
                         const CalibrationTable& stats);

/// One tau per id group (typically one group per repeat), averaged.
CorrelationReport triplet_level_correlation(const ScoreMatrix& matrix, std::string_view metric,
                                            const std::vector<std::vector<std::string>>& groups,
                                            bool use_lgn, const CalibrationTable& stats);

struct CvReport {
  std::string metric;
  int level = 0;
  std::map<Direction, double> per_direction_means;
  double cv_percent = 0.0;
};

/// CV across directions of monolingual system scores at one quality level.
/// Each direction's value is the mean S_M over its repeats.
CvReport cross_lingual_cv(const std::vector<PseudoSystem>& systems,
                          const std::vector<SystemEvaluation>& evaluations,
                          std::string_view metric, int level);

struct TTestResult {
  double t = 0.0;
  int df = 0;
  double p_two_tailed = 1.0;
};

/// Paired two-tailed Student t-test on d = a - b. All-zero differences return
/// t = 0, p = 1. Constant non-zero differences give t = +/-inf and the
/// smallest positive p.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// Two-tailed tail mass P(|T| >= |t|) of Student's t with df degrees of
/// freedom, via the regularized incomplete beta function.
double student_t_two_tailed(double t, double df);

struct StabilityRow {
  std::string metric;
  Direction direction;
  int level = 0;
  int repeats = 0;
  double mean = 0.0;
  double variance = 0.0;  // sample variance of per-repeat S_M
};

/// Mean and variance of monolingual S_M using the first R repeats, for each R
/// in `repeat_counts`.
std::vector<StabilityRow> repeat_stability(const std::vector<PseudoSystem>& systems,
                                           const std::vector<SystemEvaluation>& evaluations,
                                           std::string_view metric,
                                           const std::vector<int>& repeat_counts);

}  // namespace xqm
