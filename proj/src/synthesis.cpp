#include "xqm/synthesis.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

#include "xqm/error.hpp"
#include "xqm/io.hpp"
#include "xqm/parallel.hpp"
#include "xqm/utf8.hpp"

namespace xqm {

bool edits_overlap(const Edit& a, const Edit& b) {
  if (a.is_insertion() && b.is_insertion()) return a.start == b.start;
  if (a.is_insertion()) return b.start < a.start && a.start < b.end;
  if (b.is_insertion()) return a.start < b.start && b.start < a.end;
  return std::max(a.start, b.start) < std::min(a.end, b.end);
}

std::string apply_edits(std::string_view base, const std::vector<Edit>& edits) {
  auto text = utf8::decode(base);
  const auto base_length = text.size();
  for (const auto& e : edits) validate_edit(e, base_length);
  for (std::size_t i = 0; i < edits.size(); ++i) {
    for (std::size_t j = i + 1; j < edits.size(); ++j) {
      if (edits_overlap(edits[i], edits[j])) {
        throw OverlapError("edits [" + std::to_string(edits[i].start) + "," +
                           std::to_string(edits[i].end) + ") and [" +
                           std::to_string(edits[j].start) + "," + std::to_string(edits[j].end) +
                           ") overlap");
      }
    }
  }
  // Splice from the back so offsets of the remaining edits stay valid. Among
  // edits sharing a start the range goes first, leaving an insertion at that
  // offset in front of the replaced text.
  std::vector<const Edit*> order;
  order.reserve(edits.size());
  for (const auto& e : edits) order.push_back(&e);
  std::sort(order.begin(), order.end(), [](const Edit* x, const Edit* y) {
    return std::tie(x->start, x->end) > std::tie(y->start, y->end);
  });
  for (const Edit* e : order) {
    text.replace(e->start, e->end - e->start, utf8::decode(e->replacement));
  }
  return utf8::encode(text);
}

int mqm_deduction(int error_count) {
  if (error_count < 0 || error_count > kMaxErrors) {
    throw DomainError("error count " + std::to_string(error_count) + " outside [0, " +
                      std::to_string(kMaxErrors) + "]");
  }
  return kPointsPerMajorError * error_count;
}

std::vector<PseudoTranslation> enumerate_pseudo_translations(
    const SegmentPair& pair, const std::vector<ErrorCandidate>& candidates, int k_max) {
  if (k_max < 0 || k_max > kMaxErrors) {
    throw DomainError("k_max " + std::to_string(k_max) + " outside [0, 5]");
  }
  std::vector<const ErrorCandidate*> sorted;
  sorted.reserve(candidates.size());
  for (const auto& c : candidates) {
    if (c.pair_id != pair.pair_id || c.direction != pair.direction) {
      throw IntegrityError("candidate '" + c.id + "' belongs to pair '" + c.pair_id +
                           "', not '" + pair.pair_id + "'");
    }
    sorted.push_back(&c);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const ErrorCandidate* a, const ErrorCandidate* b) { return a->id < b->id; });
  const std::size_t n = sorted.size();

  std::vector<PseudoTranslation> out;
  std::vector<std::size_t> chosen;
  auto emit = [&] {
    PseudoTranslation pt;
    pt.pair_id = pair.pair_id;
    pt.direction = pair.direction;
    for (auto i : chosen) {
      pt.edits.push_back(sorted[i]->edit);
      pt.candidate_ids.push_back(sorted[i]->id);
    }
    std::sort(pt.edits.begin(), pt.edits.end(), [](const Edit& a, const Edit& b) {
      return std::tie(a.start, a.end) < std::tie(b.start, b.end);
    });
    pt.text = chosen.empty() ? pair.reference : apply_edits(pair.reference, pt.edits);
    pt.error_count = static_cast<int>(chosen.size());
    pt.deduction = mqm_deduction(pt.error_count);
    out.push_back(std::move(pt));
  };
  // Depth-first over index tuples yields lexicographic subset order.
  auto extend = [&](auto&& self, std::size_t from) -> void {
    emit();
    if (static_cast<int>(chosen.size()) == k_max) return;
    for (std::size_t i = from; i < n; ++i) {
      const bool clash = std::any_of(chosen.begin(), chosen.end(), [&](std::size_t j) {
        return edits_overlap(sorted[i]->edit, sorted[j]->edit);
      });
      if (clash) continue;
      chosen.push_back(i);
      self(self, i + 1);
      chosen.pop_back();
    }
  };
  extend(extend, 0);
  return out;
}

TripletPool::TripletPool(Direction direction, std::vector<Triplet> triplets)
    : direction_(std::move(direction)), triplets_(std::move(triplets)) {
  for (std::size_t i = 0; i < triplets_.size(); ++i) {
    const auto& t = triplets_[i];
    if (t.translation.direction != direction_) {
      throw IntegrityError("triplet '" + t.triplet_id + "' has direction " +
                           t.translation.direction.str() + ", pool is " + direction_.str());
    }
    if (!index_.emplace(t.triplet_id, i).second) {
      throw IntegrityError("duplicate triplet id '" + t.triplet_id + "'");
    }
    by_level_[t.level()].push_back(i);
  }
}

std::size_t TripletPool::count_at(int level) const {
  const auto it = by_level_.find(level);
  return it == by_level_.end() ? 0 : it->second.size();
}

const Triplet* TripletPool::find(std::string_view triplet_id) const {
  const auto it = index_.find(triplet_id);
  return it == index_.end() ? nullptr : &triplets_[it->second];
}

std::map<int, LevelStats> TripletPool::level_stats() const {
  // pair -> level -> count, with pairs in first-seen order
  std::vector<std::string> pair_order;
  std::unordered_map<std::string, std::map<int, std::size_t>> counts;
  for (const auto& t : triplets_) {
    auto [it, inserted] = counts.try_emplace(t.translation.pair_id);
    if (inserted) pair_order.push_back(t.translation.pair_id);
    ++it->second[t.level()];
  }
  std::map<int, LevelStats> stats;
  for (const auto& [level, indices] : by_level_) {
    LevelStats s;
    s.total = indices.size();
    s.min_per_pair = std::numeric_limits<std::size_t>::max();
    for (const auto& pid : pair_order) {
      const auto& per = counts[pid];
      const auto it = per.find(level);
      const std::size_t c = it == per.end() ? 0 : it->second;
      s.min_per_pair = std::min(s.min_per_pair, c);
      s.max_per_pair = std::max(s.max_per_pair, c);
    }
    stats[level] = s;
  }
  return stats;
}

TripletPool build_triplet_pool(const Direction& direction, const std::vector<SegmentPair>& pairs,
                               const std::vector<ErrorCandidate>& candidates, int k_max,
                               int threads) {
  std::unordered_map<std::string, std::vector<ErrorCandidate>> grouped;
  for (const auto& p : pairs) {
    if (p.direction != direction) {
      throw IntegrityError("pair '" + p.pair_id + "' is " + p.direction.str() + ", expected " +
                           direction.str());
    }
    grouped.try_emplace(p.pair_id);
  }
  for (const auto& c : candidates) {
    if (!c.filter.accepted) {
      throw IntegrityError("candidate '" + c.id + "' was not accepted by the annotators");
    }
    const auto it = grouped.find(c.pair_id);
    if (it == grouped.end()) {
      throw IntegrityError("candidate '" + c.id + "' references unknown pair '" + c.pair_id + "'");
    }
    it->second.push_back(c);
  }

  std::vector<std::vector<PseudoTranslation>> per_pair(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t i) {
    per_pair[i] = enumerate_pseudo_translations(pairs[i], grouped.at(pairs[i].pair_id), k_max);
  });

  std::vector<Triplet> triplets;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (std::size_t j = 0; j < per_pair[i].size(); ++j) {
      Triplet t;
      t.triplet_id = direction.str() + ":" + pairs[i].pair_id + "#" + std::to_string(j);
      t.source = pairs[i].source;
      t.reference = pairs[i].reference;
      t.translation = std::move(per_pair[i][j]);
      triplets.push_back(std::move(t));
    }
  }
  return TripletPool(direction, std::move(triplets));
}

std::string format_edits(const std::vector<Edit>& edits) {
  std::string out;
  for (std::size_t i = 0; i < edits.size(); ++i) {
    if (i > 0) out += ';';
    out += std::to_string(edits[i].start) + ":" + std::to_string(edits[i].end) + ":" +
           io::percent_escape(edits[i].replacement);
  }
  return out;
}

std::vector<Edit> parse_edits(std::string_view field) {
  std::vector<Edit> out;
  if (field.empty()) return out;
  for (const auto& item : io::split(field, ';')) {
    const auto parts = io::split(item, ':');
    if (parts.size() != 3) throw ParseError("malformed edit '" + item + "'");
    auto to_size = [&](const std::string& s) {
      if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) {
            return std::isdigit(c) != 0;
          })) {
        throw ParseError("malformed edit offset in '" + item + "'");
      }
      return static_cast<std::size_t>(std::stoull(s));
    };
    out.push_back({to_size(parts[0]), to_size(parts[1]), io::percent_unescape(parts[2])});
  }
  return out;
}

std::string write_pool_tsv(const std::map<Direction, TripletPool>& pools) {
  std::string out = io::join(pool_header(), "\t") + "\n";
  for (const auto& [direction, pool] : pools) {
    for (const auto& t : pool.triplets()) {
      out += t.triplet_id + '\t' + t.translation.pair_id + '\t' + direction.str() + '\t' +
             std::to_string(t.level()) + '\t' + t.source + '\t' + t.translation.text + '\t' +
             t.reference + '\t' + format_edits(t.translation.edits) + '\n';
    }
  }
  return out;
}

std::map<Direction, TripletPool> parse_pool_tsv(std::string_view text,
                                                std::string_view source_name) {
  const auto table = io::parse_tsv(text, pool_header(), source_name);
  std::map<Direction, std::vector<Triplet>> grouped;
  for (const auto& row : table.rows) {
    const auto where = std::string(source_name) + ":" + std::to_string(row.line);
    const auto& f = row.fields;
    Triplet t;
    t.triplet_id = f[0];
    t.translation.pair_id = f[1];
    t.translation.direction = Direction::parse(f[2]);
    t.source = f[4];
    t.translation.text = f[5];
    t.reference = f[6];
    t.translation.edits = parse_edits(f[7]);
    t.translation.error_count = static_cast<int>(t.translation.edits.size());
    t.translation.deduction = mqm_deduction(t.translation.error_count);
    if (f[3] != std::to_string(t.translation.error_count)) {
      throw IntegrityError(where + ": level " + f[3] + " disagrees with " +
                           std::to_string(t.translation.error_count) + " edit(s)");
    }
    const auto rebuilt = t.translation.edits.empty()
                             ? t.reference
                             : apply_edits(t.reference, t.translation.edits);
    if (rebuilt != t.translation.text) {
      throw IntegrityError(where + ": translation does not equal reference with edits applied");
    }
    grouped[t.translation.direction].push_back(std::move(t));
  }
  std::map<Direction, TripletPool> pools;
  for (auto& [direction, triplets] : grouped) {
    pools.emplace(direction, TripletPool(direction, std::move(triplets)));
  }
  return pools;
}

std::string render_injection_prompt(const SegmentPair& pair, std::string_view error_type,
                                    Half half, const std::filesystem::path& template_dir) {
  const bool known = error_type == "addition" || error_type == "omission" ||
                     error_type == "mistranslation" || error_type == "untranslated";
  if (!known) throw ConfigError("unknown error type '" + std::string(error_type) + "'");
  const auto path = template_dir / (std::string(error_type) + ".txt");
  if (!std::filesystem::exists(path)) {
    throw ConfigError("missing prompt template " + path.string());
  }
  const auto tpl = io::read_file(path);

  auto is_ident = [](char c, bool first) {
    return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_' ||
           (!first && std::isdigit(static_cast<unsigned char>(c)) != 0);
  };
  std::string out;
  out.reserve(tpl.size() + pair.source.size() + pair.reference.size());
  for (std::size_t i = 0; i < tpl.size(); ++i) {
    if (tpl[i] != '{') {
      out.push_back(tpl[i]);
      continue;
    }
    std::size_t j = i + 1;
    while (j < tpl.size() && is_ident(tpl[j], j == i + 1)) ++j;
    if (j == i + 1 || j >= tpl.size() || tpl[j] != '}') {
      out.push_back(tpl[i]);  // literal brace
      continue;
    }
    const auto name = tpl.substr(i + 1, j - i - 1);
    if (name == "src") {
      out += pair.source;
    } else if (name == "ref") {
      out += pair.reference;
    } else if (name == "half") {
      out += to_string(half);
    } else {
      throw TemplateError("unresolved placeholder {" + name + "} in " + path.string());
    }
    i = j;
  }
  return out;
}

std::string render_injection_prompt(const SegmentPair& pair, ErrorType error_type, Half half,
                                    const std::filesystem::path& template_dir) {
  return render_injection_prompt(pair, to_string(error_type), half, template_dir);
}

}  // namespace xqm
