#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace xqm {

/// A translation direction such as "en-zh". Language codes are 2-3 lowercase
/// ASCII letters.
class Direction {
 public:
  Direction() = default;
  Direction(std::string source_lang, std::string target_lang);

  /// Parses "src-tgt". Throws DomainError on malformed input.
  static Direction parse(std::string_view text);

  const std::string& source_lang() const { return source_; }
  const std::string& target_lang() const { return target_; }
  std::string str() const { return source_ + "-" + target_; }

  auto operator<=>(const Direction&) const = default;
  bool operator==(const Direction&) const = default;

 private:
  std::string source_;
  std::string target_;
};

struct SegmentPair {
  std::string pair_id;
  Direction direction;
  std::string source;
  std::string reference;
};

enum class ErrorType { Addition, Omission, Mistranslation, Untranslated };
enum class Half { First, Second };

std::string_view to_string(ErrorType type);
std::string_view to_string(Half half);
ErrorType parse_error_type(std::string_view text);
Half parse_half(std::string_view text);

/// Replaces the code points [start, end) of a base text with `replacement`.
struct Edit {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string replacement;  // UTF-8

  bool is_insertion() const { return start == end; }
  bool is_deletion() const { return replacement.empty(); }

  bool operator==(const Edit&) const = default;
};

/// Throws BoundsError/DomainError if `edit` is not a valid edit of a base of
/// `base_length` code points (out of range, reversed, or a no-op).
void validate_edit(const Edit& edit, std::size_t base_length);

struct Vote {
  std::string annotator_id;
  bool accept = false;

  bool operator==(const Vote&) const = default;
};

struct FilterStatus {
  std::vector<Vote> votes;
  bool accepted = false;

  bool operator==(const FilterStatus&) const = default;
};

struct ErrorCandidate {
  std::string id;
  std::string pair_id;
  Direction direction;
  ErrorType error_type = ErrorType::Addition;
  Half half = Half::First;
  std::string tagged_text;
  Edit edit;
  FilterStatus filter;
};

/// Result of stripping the single <v>...</v> marker pair.
struct TaggedText {
  std::string detagged;   // UTF-8
  std::size_t tag_open;   // code-point offset of the enclosed region
  std::size_t tag_close;  // exclusive end of the enclosed region
};

TaggedText parse_tagged(std::string_view tagged_text);

/// Canonical edit turning `base` into `candidate_detagged`.
///
/// Text outside [tag_open, tag_close) of the candidate must match the base
/// verbatim (a prefix before the tag and a suffix after it); otherwise the
/// candidate changes text the annotators never saw highlighted and an
/// AlignmentError is thrown. Inside the region the edit is shrunk by taking
/// the longest common prefix first and then the longest common suffix, which
/// fixes one representative when repeated substrings make the alignment
/// ambiguous.
Edit derive_edit(std::string_view base, std::string_view candidate_detagged,
                 std::size_t tag_open, std::size_t tag_close);

std::vector<SegmentPair> parse_segment_pairs(std::string_view tsv, const Direction& direction,
                                             std::string_view source_name = "<pairs>");
std::vector<SegmentPair> load_segment_pairs(const std::filesystem::path& path,
                                            const Direction& direction);

struct CandidateRejection {
  std::string candidate_id;
  ErrorType error_type = ErrorType::Addition;
  std::size_t line = 0;
  std::string reason;
};

struct CandidateLoad {
  std::vector<ErrorCandidate> candidates;
  std::vector<CandidateRejection> rejected;
};

/// Reads a candidate TSV. Candidates whose markers are malformed or whose edit
/// cannot be aligned against the base reference land in `rejected` with a
/// diagnostic. Unknown pair ids and duplicate candidate ids are hard errors.
CandidateLoad parse_candidates(std::string_view tsv, const std::vector<SegmentPair>& pairs,
                               std::string_view source_name = "<candidates>");
CandidateLoad load_candidates(const std::filesystem::path& path,
                              const std::vector<SegmentPair>& pairs);

struct Decision {
  std::string candidate_id;
  std::string annotator_id;
  bool reject = false;
};

std::vector<Decision> parse_decisions(std::string_view tsv,
                                      std::string_view source_name = "<decisions>");
std::vector<Decision> load_decisions(const std::filesystem::path& path);

/// Votes required per direction (keyed by "src-tgt"); missing directions use
/// `default_required`.
struct FilterConfig {
  int default_required = 2;
  std::map<std::string, int> required_by_direction;

  int required_for(const Direction& direction) const;
};

/// Populates each candidate's FilterStatus from the decision sheet. A
/// candidate is accepted only when it has at least the required number of
/// votes and none of them rejects.
std::vector<ErrorCandidate> apply_filters(std::vector<ErrorCandidate> candidates,
                                          const std::vector<Decision>& decisions,
                                          const FilterConfig& config = {});

}  // namespace xqm
