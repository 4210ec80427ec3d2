#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "xqm/corpus.hpp"

namespace xqm {

inline constexpr int kMaxErrors = 5;
inline constexpr int kPointsPerMajorError = 5;

/// A reference with k merged single-error edits.
struct PseudoTranslation {
  std::string pair_id;
  Direction direction;
  std::vector<Edit> edits;                 // sorted by start, pairwise non-overlapping
  std::vector<std::string> candidate_ids;  // provenance, same order as the subset
  std::string text;
  int error_count = 0;
  int deduction = 0;  // MQM points, 5 per major error
};

struct Triplet {
  std::string triplet_id;
  std::string source;
  PseudoTranslation translation;
  std::string reference;

  int level() const { return translation.error_count; }
};

/// Two edits overlap when their half-open footprints share a code point, when
/// both insert at the same offset, or when one inserts strictly inside the
/// range the other replaces. Touching ranges do not overlap.
bool edits_overlap(const Edit& a, const Edit& b);

/// Applies pairwise non-overlapping edits to `base`. The result does not
/// depend on the order of `edits`.
std::string apply_edits(std::string_view base, const std::vector<Edit>& edits);

/// MQM points lost for `error_count` major errors.
int mqm_deduction(int error_count);

/// One pseudo translation per subset of `candidates` (size <= k_max) whose
/// edits are pairwise disjoint, including the empty subset. Subsets are
/// emitted in lexicographic order over candidates sorted by id.
std::vector<PseudoTranslation> enumerate_pseudo_translations(
    const SegmentPair& pair, const std::vector<ErrorCandidate>& candidates, int k_max = kMaxErrors);

struct LevelStats {
  std::size_t total = 0;
  std::size_t min_per_pair = 0;
  std::size_t max_per_pair = 0;
};

class TripletPool {
 public:
  TripletPool() = default;
  TripletPool(Direction direction, std::vector<Triplet> triplets);

  const Direction& direction() const { return direction_; }
  const std::vector<Triplet>& triplets() const { return triplets_; }

  /// Indices into triplets(), grouped by quality level.
  const std::map<int, std::vector<std::size_t>>& by_level() const { return by_level_; }
  std::size_t count_at(int level) const;

  const Triplet& at(std::size_t index) const { return triplets_.at(index); }
  const Triplet* find(std::string_view triplet_id) const;

  /// Per-level totals and per-pair min/max counts over all pairs in the pool.
  std::map<int, LevelStats> level_stats() const;

 private:
  Direction direction_;
  std::vector<Triplet> triplets_;
  std::map<int, std::vector<std::size_t>> by_level_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// Enumerates every pair's pseudo translations into a pool. Only accepted
/// candidates may be supplied. Work is spread over `threads` workers; the
/// output order is by pair order in `pairs`, independent of scheduling.
TripletPool build_triplet_pool(const Direction& direction, const std::vector<SegmentPair>& pairs,
                               const std::vector<ErrorCandidate>& candidates,
                               int k_max = kMaxErrors, int threads = 1);

std::string format_edits(const std::vector<Edit>& edits);
std::vector<Edit> parse_edits(std::string_view field);

inline const std::vector<std::string>& pool_header() {
  static const std::vector<std::string> h = {"triplet_id", "pair_id",     "direction",
                                             "level",      "source",      "translation",
                                             "reference",  "edits"};
  return h;
}

/// Pool file body (header + rows), pools emitted in map order.
std::string write_pool_tsv(const std::map<Direction, TripletPool>& pools);
std::map<Direction, TripletPool> parse_pool_tsv(std::string_view text,
                                                std::string_view source_name = "<pool>");

/// Renders `{template_dir}/{error_type}.txt`, substituting {src}, {ref} and
/// {half}. Any other {name} placeholder is a TemplateError.
std::string render_injection_prompt(const SegmentPair& pair, std::string_view error_type,
                                    Half half, const std::filesystem::path& template_dir);
std::string render_injection_prompt(const SegmentPair& pair, ErrorType error_type, Half half,
                                    const std::filesystem::path& template_dir);

}  // namespace xqm
