#include "xqm/assembly.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xqm/error.hpp"
#include "xqm/io.hpp"
#include "xqm/parallel.hpp"

namespace xqm {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = splitmix64(master);
  for (auto tag : tags) h = splitmix64(h ^ tag);
  return h;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw DomainError("Rng::below requires a positive bound");
  // Largest multiple of bound representable; draws at or above it are retried.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = next();
  while (x >= limit) x = next();
  return x % bound;
}

std::vector<std::size_t> sample_indices(Rng& rng, std::size_t population, std::size_t k,
                                        bool with_replacement) {
  std::vector<std::size_t> out;
  out.reserve(k);
  if (with_replacement) {
    if (population == 0 && k > 0) throw CapacityError("cannot sample from an empty population");
    for (std::size_t i = 0; i < k; ++i) out.push_back(rng.below(population));
    return out;
  }
  if (k > population) {
    throw CapacityError("cannot draw " + std::to_string(k) + " distinct items from " +
                        std::to_string(population));
  }
  std::vector<std::size_t> perm(population);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(population - i));
    std::swap(perm[i], perm[j]);
    out.push_back(perm[i]);
  }
  return out;
}

void SamplingPlan::validate() const {
  if (n_per_direction < 1) throw ConfigError("n_per_direction must be >= 1");
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
}

double DirectionMembers::mean_deduction() const {
  if (levels.empty()) return 0.0;
  double sum = 0.0;
  for (int level : levels) sum += mqm_deduction(level);
  return sum / static_cast<double>(levels.size());
}

double human_score_of(const std::vector<DirectionMembers>& members) {
  if (members.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& m : members) {
    double dir_sum = 0.0;
    for (int level : m.levels) dir_sum += -static_cast<double>(mqm_deduction(level));
    sum += dir_sum / static_cast<double>(m.levels.size());
  }
  return sum / static_cast<double>(members.size());
}

namespace {

constexpr std::uint64_t kTagMono = 0x6D6F6E6FULL;   // "mono"
constexpr std::uint64_t kTagMulti = 0x6D756C74ULL;  // "mult"

// Draws `count` ids at `level` from `pool` into `out`.
void draw_level(const TripletPool& pool, int level, std::size_t count, const SamplingPlan& plan,
                Rng& rng, DirectionMembers& out) {
  if (count == 0) return;
  static const std::vector<std::size_t> kEmpty;
  const auto it = pool.by_level().find(level);
  const auto& indices = it == pool.by_level().end() ? kEmpty : it->second;
  if (!plan.with_replacement && indices.size() < count) {
    throw CapacityError(pool.direction().str() + " level " + std::to_string(level) + ": need " +
                        std::to_string(count) + " triplets, pool has " +
                        std::to_string(indices.size()) + " (short by " +
                        std::to_string(count - indices.size()) + ")");
  }
  if (indices.empty()) {
    throw CapacityError(pool.direction().str() + " level " + std::to_string(level) +
                        ": no triplets available");
  }
  for (auto pick : sample_indices(rng, indices.size(), count, plan.with_replacement)) {
    const auto& t = pool.at(indices[pick]);
    out.triplet_ids.push_back(t.triplet_id);
    out.levels.push_back(t.level());
  }
}

struct Mixture {
  int low_level = 0;
  std::size_t high_count = 0;  // segments drawn from low_level + 1
};

Mixture mixture_for(double target, int n) {
  if (!(target >= 0.0 && target <= 25.0)) {
    throw DomainError("target deduction " + io::format_double(target) + " outside [0, 25]");
  }
  // Total error count across n segments; snap values within rounding noise of
  // an integer so exact targets are not pushed up by one.
  const double units = target * n / kPointsPerMajorError;
  const double nearest = std::round(units);
  const auto total = static_cast<long long>(std::abs(units - nearest) < 1e-9 ? nearest
                                                                            : std::ceil(units));
  Mixture m;
  m.low_level = static_cast<int>(std::min<long long>(total / n, kMaxErrors));
  m.high_count = static_cast<std::size_t>(total - static_cast<long long>(m.low_level) * n);
  return m;
}

std::vector<Direction> plan_directions(const std::map<Direction, TripletPool>& pools,
                                       const SamplingPlan& plan) {
  std::vector<Direction> out = plan.directions;
  if (out.empty()) {
    for (const auto& [d, _] : pools) out.push_back(d);
  }
  // Members are stored in direction order, same as a manifest read back.
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

PseudoSystem sample_monolingual_system(const TripletPool& pool, int level,
                                       const SamplingPlan& plan, int repeat_index) {
  plan.validate();
  if (level < 0 || level > kMaxErrors) {
    throw DomainError("quality level " + std::to_string(level) + " outside [0, 5]");
  }
  const auto& dir = pool.direction();
  Rng rng(derive_seed(plan.seed, {kTagMono, fnv1a64(dir.str()),
                                  static_cast<std::uint64_t>(level),
                                  static_cast<std::uint64_t>(repeat_index)}));
  DirectionMembers members{dir, {}, {}};
  draw_level(pool, level, static_cast<std::size_t>(plan.n_per_direction), plan, rng, members);

  PseudoSystem sys;
  sys.system_id = "mono_" + dir.str() + "_l" + std::to_string(level) + "_r" +
                  std::to_string(repeat_index);
  sys.kind = "monolingual";
  sys.members.push_back(std::move(members));
  sys.target_deduction = mqm_deduction(level);
  sys.level = level;
  sys.human_score = human_score_of(sys.members);
  sys.repeat_index = repeat_index;
  sys.seed = plan.seed;
  return sys;
}

PseudoSystem sample_multilingual_system(const std::map<Direction, TripletPool>& pools,
                                        double target_deduction, const SamplingPlan& plan,
                                        int repeat_index, int target_index) {
  plan.validate();
  const auto mix = mixture_for(target_deduction, plan.n_per_direction);
  const auto n = static_cast<std::size_t>(plan.n_per_direction);
  const auto directions = plan_directions(pools, plan);
  if (directions.empty()) throw ConfigError("no directions to sample from");

  PseudoSystem sys;
  sys.system_id = "r" + std::to_string(repeat_index) + "_t" + std::to_string(target_index);
  sys.kind = "multilingual";
  sys.target_deduction = target_deduction;
  sys.repeat_index = repeat_index;
  sys.seed = plan.seed;

  std::string shortfall;
  for (const auto& dir : directions) {
    const auto it = pools.find(dir);
    if (it == pools.end()) throw DependencyError("no triplet pool for " + dir.str());
    const auto& pool = it->second;
    if (!plan.with_replacement) {
      const auto hi_need = mix.high_count;
      const auto lo_need = n - mix.high_count;
      const auto hi_have = mix.high_count > 0 ? pool.count_at(mix.low_level + 1) : 0;
      const auto lo_have = pool.count_at(mix.low_level);
      if (hi_have < hi_need || lo_have < lo_need) {
        shortfall += " " + dir.str() + ": level " + std::to_string(mix.low_level) + " " +
                     std::to_string(lo_have) + "/" + std::to_string(lo_need);
        if (hi_need > 0) {
          shortfall += ", level " + std::to_string(mix.low_level + 1) + " " +
                       std::to_string(hi_have) + "/" + std::to_string(hi_need);
        }
        shortfall += ";";
        continue;
      }
    }
    Rng rng(derive_seed(plan.seed,
                        {kTagMulti, static_cast<std::uint64_t>(repeat_index),
                         static_cast<std::uint64_t>(target_index), fnv1a64(dir.str())}));
    DirectionMembers members{dir, {}, {}};
    draw_level(pool, mix.low_level + 1, mix.high_count, plan, rng, members);
    draw_level(pool, mix.low_level, n - mix.high_count, plan, rng, members);
    sys.members.push_back(std::move(members));
  }
  if (!shortfall.empty()) {
    throw CapacityError("target " + io::format_double(target_deduction) +
                        " unreachable (available/needed):" + shortfall);
  }
  sys.human_score = human_score_of(sys.members);
  return sys;
}

std::vector<PseudoSystem> generate_system_suite(const std::map<Direction, TripletPool>& pools,
                                                const std::vector<double>& targets,
                                                const SamplingPlan& plan, int threads) {
  plan.validate();
  if (targets.empty()) throw ConfigError("at least one target is required");
  for (std::size_t i = 1; i < targets.size(); ++i) {
    if (!(targets[i] > targets[i - 1])) {
      throw ConfigError("targets must be strictly increasing (" +
                        io::format_double(targets[i - 1]) + " then " +
                        io::format_double(targets[i]) + ")");
    }
    const auto a = mixture_for(targets[i - 1], plan.n_per_direction);
    const auto b = mixture_for(targets[i], plan.n_per_direction);
    if (a.low_level == b.low_level && a.high_count == b.high_count) {
      throw ConfigError("targets " + io::format_double(targets[i - 1]) + " and " +
                        io::format_double(targets[i]) + " give the same level mixture at n = " +
                        std::to_string(plan.n_per_direction));
    }
  }
  const std::size_t per_repeat = targets.size();
  std::vector<PseudoSystem> out(per_repeat * static_cast<std::size_t>(plan.repeats));
  parallel_for(out.size(), threads, [&](std::size_t i) {
    const auto repeat = static_cast<int>(i / per_repeat);
    const auto t = static_cast<int>(i % per_repeat);
    out[i] = sample_multilingual_system(pools, targets[static_cast<std::size_t>(t)], plan,
                                        repeat, t);
  });
  return out;
}

std::vector<PseudoSystem> generate_monolingual_suite(
    const std::map<Direction, TripletPool>& pools, const std::vector<int>& levels,
    const SamplingPlan& plan, int threads) {
  plan.validate();
  const auto directions = plan_directions(pools, plan);
  struct Job {
    const TripletPool* pool;
    int level;
    int repeat;
  };
  std::vector<Job> jobs;
  for (const auto& dir : directions) {
    const auto it = pools.find(dir);
    if (it == pools.end()) throw DependencyError("no triplet pool for " + dir.str());
    for (int level : levels) {
      for (int r = 0; r < plan.repeats; ++r) jobs.push_back({&it->second, level, r});
    }
  }
  std::vector<PseudoSystem> out(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t i) {
    out[i] = sample_monolingual_system(*jobs[i].pool, jobs[i].level, plan, jobs[i].repeat);
  });
  return out;
}

std::vector<double> default_targets() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(2.5 * i);
  return t;
}

std::string write_manifest(const std::vector<PseudoSystem>& systems) {
  std::string out;
  for (const auto& s : systems) {
    nlohmann::ordered_json j;
    j["system_id"] = s.system_id;
    j["kind"] = s.kind;
    j["seed"] = s.seed;
    j["repeat"] = s.repeat_index;
    j["target_deduction"] = s.target_deduction;
    if (s.level) j["level"] = *s.level;
    j["human_score"] = s.human_score;
    nlohmann::ordered_json achieved = nlohmann::ordered_json::object();
    nlohmann::ordered_json members = nlohmann::ordered_json::object();
    for (const auto& m : s.members) {
      achieved[m.direction.str()] = m.mean_deduction();
      members[m.direction.str()] = m.triplet_ids;
    }
    j["achieved_deduction"] = achieved;
    j["members"] = members;
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<PseudoSystem> parse_manifest(std::string_view text,
                                         const std::map<Direction, TripletPool>& pools,
                                         std::string_view source_name) {
  std::vector<PseudoSystem> out;
  std::size_t line_no = 0;
  for (const auto& line : io::split(text, '\n')) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto where = std::string(source_name) + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (j.contains("meta")) continue;
    try {
      PseudoSystem s;
      s.system_id = j.at("system_id").get<std::string>();
      s.kind = j.value("kind", "multilingual");
      s.seed = j.at("seed").get<std::uint64_t>();
      s.repeat_index = j.at("repeat").get<int>();
      s.target_deduction = j.at("target_deduction").get<double>();
      if (j.contains("level")) s.level = j.at("level").get<int>();
      s.human_score = j.at("human_score").get<double>();
      for (const auto& [dir_text, ids] : j.at("members").items()) {
        DirectionMembers m{Direction::parse(dir_text), {}, {}};
        const auto pit = pools.find(m.direction);
        if (pit == pools.end()) {
          throw IntegrityError(where + ": no pool for direction " + dir_text);
        }
        for (const auto& id : ids) {
          const auto* t = pit->second.find(id.get<std::string>());
          if (t == nullptr) {
            throw IntegrityError(where + ": unknown triplet '" + id.get<std::string>() + "'");
          }
          m.triplet_ids.push_back(t->triplet_id);
          m.levels.push_back(t->level());
        }
        s.members.push_back(std::move(m));
      }
      std::sort(s.members.begin(), s.members.end(),
                [](const auto& a, const auto& b) { return a.direction < b.direction; });
      if (human_score_of(s.members) != s.human_score) {
        throw IntegrityError(where + ": stored human_score does not match member deductions");
      }
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  return out;
}

}  // namespace xqm
