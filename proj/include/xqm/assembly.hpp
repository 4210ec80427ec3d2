#pragma once

#include <cstdint>
#include <initializer_list>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "xqm/synthesis.hpp"

namespace xqm {

/// Identifier persisted in every report so runs can be replayed elsewhere.
///
/// Engine: std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Sub-seeds: start from splitmix64(master) and fold each tag with
/// h = splitmix64(h ^ tag); string tags are first reduced with 64-bit FNV-1a.
/// Bounded draws use rejection on the top of the 64-bit range, never the
/// implementation-defined std distributions.
inline constexpr std::string_view kRngAlgorithm = "mt19937_64+splitmix64-subseed+reject-v1";

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view text);
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
};

/// k indices from [0, population), uniform. Without replacement this is a
/// partial Fisher-Yates shuffle and the indices are distinct.
std::vector<std::size_t> sample_indices(Rng& rng, std::size_t population, std::size_t k,
                                        bool with_replacement);

struct SamplingPlan {
  int n_per_direction = 102;
  int repeats = 10;
  std::uint64_t seed = 0;
  bool with_replacement = false;
  std::vector<Direction> directions;  // empty: every pool supplied

  void validate() const;
};

struct DirectionMembers {
  Direction direction;
  std::vector<std::string> triplet_ids;
  std::vector<int> levels;  // parallel to triplet_ids

  /// Mean MQM deduction over the members.
  double mean_deduction() const;
};

struct PseudoSystem {
  std::string system_id;
  std::string kind;  // "multilingual" or "monolingual"
  std::vector<DirectionMembers> members;
  double target_deduction = 0.0;
  std::optional<int> level;  // set for monolingual systems
  double human_score = 0.0;
  int repeat_index = 0;
  std::uint64_t seed = 0;
};

/// Signed quality: mean over directions of the per-direction mean of
/// -deduction per triplet.
double human_score_of(const std::vector<DirectionMembers>& members);

PseudoSystem sample_monolingual_system(const TripletPool& pool, int level,
                                       const SamplingPlan& plan, int repeat_index);

/// Per direction, mixes levels q and q+1 where target = 5 * (q + f) with
/// f in [0, 1): ceil(f * n) triplets come from level q+1 and the rest from
/// level q. The mean deduction hits the target exactly when f * n is integral
/// and is within 5 / n of it otherwise.
PseudoSystem sample_multilingual_system(const std::map<Direction, TripletPool>& pools,
                                        double target_deduction, const SamplingPlan& plan,
                                        int repeat_index, int target_index = 0);

/// targets.size() * plan.repeats systems, ordered by repeat then target, with
/// ids "r{repeat}_t{index}". Targets must be strictly increasing and map to
/// distinct level mixtures at plan.n_per_direction.
std::vector<PseudoSystem> generate_system_suite(const std::map<Direction, TripletPool>& pools,
                                                const std::vector<double>& targets,
                                                const SamplingPlan& plan, int threads = 1);

/// Monolingual systems for every (direction, level, repeat), in that order.
std::vector<PseudoSystem> generate_monolingual_suite(
    const std::map<Direction, TripletPool>& pools, const std::vector<int>& levels,
    const SamplingPlan& plan, int threads = 1);

/// 0, 2.5, ..., 22.5 points per segment.
std::vector<double> default_targets();

/// JSON Lines manifest, one system per line.
std::string write_manifest(const std::vector<PseudoSystem>& systems);
/// Reads a manifest back, resolving member levels through `pools`.
std::vector<PseudoSystem> parse_manifest(std::string_view text,
                                         const std::map<Direction, TripletPool>& pools,
                                         std::string_view source_name = "<manifest>");

}  // namespace xqm
