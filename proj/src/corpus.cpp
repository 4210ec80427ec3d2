#include "xqm/corpus.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "xqm/error.hpp"
#include "xqm/io.hpp"
#include "xqm/utf8.hpp"

namespace xqm {

namespace {

bool valid_lang(std::string_view code) {
  if (code.size() < 2 || code.size() > 3) return false;
  return std::all_of(code.begin(), code.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

constexpr std::string_view kOpen = "<v>";
constexpr std::string_view kClose = "</v>";

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

}  // namespace

Direction::Direction(std::string source_lang, std::string target_lang)
    : source_(std::move(source_lang)), target_(std::move(target_lang)) {
  if (!valid_lang(source_) || !valid_lang(target_)) {
    throw DomainError("invalid direction '" + source_ + "-" + target_ +
                      "': language codes must be 2-3 lowercase letters");
  }
}

Direction Direction::parse(std::string_view text) {
  const auto dash = text.find('-');
  if (dash == std::string_view::npos || text.find('-', dash + 1) != std::string_view::npos) {
    throw DomainError("invalid direction '" + std::string(text) + "': expected src-tgt");
  }
  return Direction(std::string(text.substr(0, dash)), std::string(text.substr(dash + 1)));
}

std::string_view to_string(ErrorType type) {
  switch (type) {
    case ErrorType::Addition: return "addition";
    case ErrorType::Omission: return "omission";
    case ErrorType::Mistranslation: return "mistranslation";
    case ErrorType::Untranslated: return "untranslated";
  }
  return "?";
}

std::string_view to_string(Half half) {
  return half == Half::First ? "first" : "second";
}

ErrorType parse_error_type(std::string_view text) {
  for (auto t : {ErrorType::Addition, ErrorType::Omission, ErrorType::Mistranslation,
                 ErrorType::Untranslated}) {
    if (text == to_string(t)) return t;
  }
  throw ConfigError("unknown error type '" + std::string(text) + "'");
}

Half parse_half(std::string_view text) {
  if (text == "first") return Half::First;
  if (text == "second") return Half::Second;
  throw ConfigError("unknown half '" + std::string(text) + "'");
}

void validate_edit(const Edit& edit, std::size_t base_length) {
  if (edit.start > edit.end || edit.end > base_length) {
    throw BoundsError("edit [" + std::to_string(edit.start) + "," + std::to_string(edit.end) +
                      ") out of bounds for text of length " + std::to_string(base_length));
  }
  if (edit.start == edit.end && edit.replacement.empty()) {
    throw DomainError("no-op edit at " + std::to_string(edit.start));
  }
}

TaggedText parse_tagged(std::string_view tagged_text) {
  const auto opens = count_occurrences(tagged_text, kOpen);
  const auto closes = count_occurrences(tagged_text, kClose);
  if (opens != 1 || closes != 1) {
    throw FormatError("expected exactly one <v>...</v> pair, found " + std::to_string(opens) +
                      " opener(s) and " + std::to_string(closes) + " closer(s)");
  }
  const auto open_byte = tagged_text.find(kOpen);
  const auto close_byte = tagged_text.find(kClose);
  if (close_byte < open_byte) throw FormatError("closing </v> precedes opening <v>");

  const auto before = tagged_text.substr(0, open_byte);
  const auto inside = tagged_text.substr(open_byte + kOpen.size(),
                                         close_byte - open_byte - kOpen.size());
  const auto after = tagged_text.substr(close_byte + kClose.size());

  TaggedText out;
  out.detagged.reserve(tagged_text.size());
  out.detagged.append(before).append(inside).append(after);
  out.tag_open = utf8::length(before);
  out.tag_close = out.tag_open + utf8::length(inside);
  // Validate the whole string, not only the pieces used for offsets.
  utf8::decode(out.detagged);
  return out;
}

Edit derive_edit(std::string_view base, std::string_view candidate_detagged,
                 std::size_t tag_open, std::size_t tag_close) {
  const auto b = utf8::decode(base);
  const auto c = utf8::decode(candidate_detagged);
  if (tag_open > tag_close || tag_close > c.size()) {
    throw AlignmentError("tag region [" + std::to_string(tag_open) + "," +
                         std::to_string(tag_close) + ") outside candidate");
  }
  const std::size_t tail = c.size() - tag_close;
  if (tag_open + tail > b.size()) {
    throw AlignmentError("untagged text of the candidate is longer than the base reference");
  }
  if (!std::equal(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(tag_open), b.begin())) {
    const auto mm = std::mismatch(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(tag_open),
                                  b.begin());
    throw AlignmentError("candidate differs from base at offset " +
                         std::to_string(mm.first - c.begin()) + ", before the tagged region");
  }
  if (!std::equal(c.end() - static_cast<std::ptrdiff_t>(tail), c.end(),
                  b.end() - static_cast<std::ptrdiff_t>(tail))) {
    throw AlignmentError("candidate differs from base after the tagged region (offset >= " +
                         std::to_string(tag_close) + ")");
  }

  // Region of the base replaced by c[tag_open, tag_close).
  std::size_t base_lo = tag_open;
  std::size_t base_hi = b.size() - tail;
  std::size_t cand_lo = tag_open;
  std::size_t cand_hi = tag_close;
  while (base_lo < base_hi && cand_lo < cand_hi && b[base_lo] == c[cand_lo]) {
    ++base_lo;
    ++cand_lo;
  }
  while (base_lo < base_hi && cand_lo < cand_hi && b[base_hi - 1] == c[cand_hi - 1]) {
    --base_hi;
    --cand_hi;
  }
  if (base_lo == base_hi && cand_lo == cand_hi) {
    throw AlignmentError("candidate is identical to the base reference");
  }
  return Edit{base_lo, base_hi,
              utf8::encode(std::u32string_view(c).substr(cand_lo, cand_hi - cand_lo))};
}

std::vector<SegmentPair> parse_segment_pairs(std::string_view tsv, const Direction& direction,
                                             std::string_view source_name) {
  const auto table = io::parse_tsv(tsv, {"id", "source", "reference"}, source_name);
  std::vector<SegmentPair> pairs;
  std::set<std::string> seen;
  for (const auto& row : table.rows) {
    const auto where = std::string(source_name) + ":" + std::to_string(row.line);
    if (row.fields[0].empty() || row.fields[1].empty() || row.fields[2].empty()) {
      throw ParseError(where + ": id, source and reference must be non-empty");
    }
    if (!seen.insert(row.fields[0]).second) {
      throw IntegrityError(where + ": duplicate pair id '" + row.fields[0] + "'");
    }
    utf8::decode(row.fields[1]);
    utf8::decode(row.fields[2]);
    pairs.push_back({row.fields[0], direction, row.fields[1], row.fields[2]});
  }
  return pairs;
}

std::vector<SegmentPair> load_segment_pairs(const std::filesystem::path& path,
                                            const Direction& direction) {
  return parse_segment_pairs(io::read_file(path), direction, path.string());
}

CandidateLoad parse_candidates(std::string_view tsv, const std::vector<SegmentPair>& pairs,
                               std::string_view source_name) {
  const auto table =
      io::parse_tsv(tsv, {"id", "pair_id", "error_type", "half", "tagged_text"}, source_name);
  std::unordered_map<std::string, const SegmentPair*> by_id;
  for (const auto& p : pairs) by_id.emplace(p.pair_id, &p);

  CandidateLoad out;
  std::set<std::string> seen;
  for (const auto& row : table.rows) {
    const auto where = std::string(source_name) + ":" + std::to_string(row.line);
    const auto& id = row.fields[0];
    if (id.empty()) throw ParseError(where + ": empty candidate id");
    if (!seen.insert(id).second) {
      throw IntegrityError(where + ": duplicate candidate id '" + id + "'");
    }
    const auto it = by_id.find(row.fields[1]);
    if (it == by_id.end()) {
      throw IntegrityError(where + ": candidate '" + id + "' references unknown pair '" +
                           row.fields[1] + "'");
    }
    ErrorCandidate cand;
    cand.id = id;
    cand.pair_id = row.fields[1];
    cand.direction = it->second->direction;
    try {
      cand.error_type = parse_error_type(row.fields[2]);
      cand.half = parse_half(row.fields[3]);
    } catch (const ConfigError& e) {
      throw ParseError(where + ": " + e.what());
    }
    cand.tagged_text = row.fields[4];
    try {
      const auto tagged = parse_tagged(cand.tagged_text);
      cand.edit = derive_edit(it->second->reference, tagged.detagged, tagged.tag_open,
                              tagged.tag_close);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Integrity) throw;
      out.rejected.push_back({id, cand.error_type, row.line, e.what()});
      continue;
    }
    out.candidates.push_back(std::move(cand));
  }
  return out;
}

CandidateLoad load_candidates(const std::filesystem::path& path,
                              const std::vector<SegmentPair>& pairs) {
  return parse_candidates(io::read_file(path), pairs, path.string());
}

std::vector<Decision> parse_decisions(std::string_view tsv, std::string_view source_name) {
  const auto table = io::parse_tsv(tsv, {"candidate_id", "annotator_id", "reject"}, source_name);
  std::vector<Decision> out;
  for (const auto& row : table.rows) {
    const auto& reject = row.fields[2];
    if (!reject.empty() && reject != "T") {
      throw ParseError(std::string(source_name) + ":" + std::to_string(row.line) +
                       ": reject column must be 'T' or empty");
    }
    out.push_back({row.fields[0], row.fields[1], reject == "T"});
  }
  return out;
}

std::vector<Decision> load_decisions(const std::filesystem::path& path) {
  return parse_decisions(io::read_file(path), path.string());
}

int FilterConfig::required_for(const Direction& direction) const {
  const auto it = required_by_direction.find(direction.str());
  return it == required_by_direction.end() ? default_required : it->second;
}

std::vector<ErrorCandidate> apply_filters(std::vector<ErrorCandidate> candidates,
                                          const std::vector<Decision>& decisions,
                                          const FilterConfig& config) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    index.emplace(candidates[i].id, i);
    candidates[i].filter = FilterStatus{};
  }
  for (const auto& d : decisions) {
    const auto it = index.find(d.candidate_id);
    if (it == index.end()) {
      throw IntegrityError("decision for unknown candidate '" + d.candidate_id + "'");
    }
    auto& votes = candidates[it->second].filter.votes;
    const bool repeated = std::any_of(votes.begin(), votes.end(), [&](const Vote& v) {
      return v.annotator_id == d.annotator_id;
    });
    if (repeated) {
      throw IntegrityError("annotator '" + d.annotator_id + "' voted twice on candidate '" +
                           d.candidate_id + "'");
    }
    votes.push_back({d.annotator_id, !d.reject});
  }
  for (auto& cand : candidates) {
    const int required = config.required_for(cand.direction);
    if (required < 1) {
      throw ConfigError("required_votes must be >= 1 for " + cand.direction.str());
    }
    auto& status = cand.filter;
    const bool any_reject = std::any_of(status.votes.begin(), status.votes.end(),
                                        [](const Vote& v) { return !v.accept; });
    if (status.votes.empty() ||
        (!any_reject && static_cast<int>(status.votes.size()) < required)) {
      throw ConfigError("candidate '" + cand.id + "' has " + std::to_string(status.votes.size()) +
                        " vote(s); " + std::to_string(required) + " required for " +
                        cand.direction.str());
    }
    status.accepted = !any_reject;
  }
  return candidates;
}

}  // namespace xqm
