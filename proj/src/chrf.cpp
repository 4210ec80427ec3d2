#include <string>
#include <unordered_map>
#include <vector>

#include "xqm/error.hpp"
#include "xqm/metrics.hpp"
#include "xqm/utf8.hpp"

namespace xqm {

void ChrfConfig::validate() const {
  if (char_n < 1) throw ConfigError("chrF char_n must be >= 1");
  if (word_n < 0) throw ConfigError("chrF word_n must be >= 0");
  if (!(beta > 0.0)) throw ConfigError("chrF beta must be > 0");
}

std::string ChrfConfig::describe() const {
  char beta_buf[32];
  std::snprintf(beta_buf, sizeof(beta_buf), "%g", beta);
  return std::string(word_n > 0 ? "chrF++" : "chrF") + "(c" + std::to_string(char_n) + ",w" +
         std::to_string(word_n) + ",b" + beta_buf + ")";
}

namespace {

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v';
}

// Each item is one unit: a code point for character n-grams, a token for
// word n-grams. N-grams are keyed by their units joined with U+0000, which
// never occurs inside a unit.
using Counts = std::unordered_map<std::u32string, int>;

Counts ngram_counts(const std::vector<std::u32string>& units, int n) {
  Counts counts;
  const auto un = static_cast<std::size_t>(n);
  if (units.size() < un) return counts;
  for (std::size_t i = 0; i + un <= units.size(); ++i) {
    std::u32string key;
    for (std::size_t k = 0; k < un; ++k) {
      if (k > 0) key.push_back(U'\0');
      key += units[i + k];
    }
    ++counts[key];
  }
  return counts;
}

struct OrderStats {
  int hyp_total = 0;
  int ref_total = 0;
  int matches = 0;
};

OrderStats compare(const Counts& hyp, const Counts& ref) {
  OrderStats s;
  for (const auto& [_, c] : hyp) s.hyp_total += c;
  for (const auto& [_, c] : ref) s.ref_total += c;
  for (const auto& [gram, c] : hyp) {
    const auto it = ref.find(gram);
    if (it != ref.end()) s.matches += std::min(c, it->second);
  }
  return s;
}

std::vector<std::u32string> chars_without_space(const std::u32string& text) {
  std::vector<std::u32string> out;
  for (char32_t c : text) {
    if (!is_space(c)) out.emplace_back(1, c);
  }
  return out;
}

std::vector<std::u32string> words(const std::u32string& text) {
  std::vector<std::u32string> out;
  std::u32string cur;
  for (char32_t c : text) {
    if (is_space(c)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

double chrf_score(std::string_view hypothesis, std::string_view reference,
                  const ChrfConfig& config) {
  config.validate();
  const auto hyp = utf8::decode(hypothesis);
  const auto ref = utf8::decode(reference);

  double precision_sum = 0.0;
  double recall_sum = 0.0;
  int orders = 0;
  auto accumulate = [&](const std::vector<std::u32string>& h, const std::vector<std::u32string>& r,
                        int max_n) {
    for (int n = 1; n <= max_n; ++n) {
      const auto s = compare(ngram_counts(h, n), ngram_counts(r, n));
      if (s.hyp_total == 0 && s.ref_total == 0) continue;
      precision_sum += s.hyp_total > 0 ? static_cast<double>(s.matches) / s.hyp_total : 0.0;
      recall_sum += s.ref_total > 0 ? static_cast<double>(s.matches) / s.ref_total : 0.0;
      ++orders;
    }
  };
  accumulate(chars_without_space(hyp), chars_without_space(ref), config.char_n);
  if (config.word_n > 0) accumulate(words(hyp), words(ref), config.word_n);
  if (orders == 0) return 0.0;

  const double p = precision_sum / orders;
  const double r = recall_sum / orders;
  const double b2 = config.beta * config.beta;
  const double denom = b2 * p + r;
  if (denom <= 0.0) return 0.0;
  return 100.0 * (1.0 + b2) * p * r / denom;
}

}  // namespace xqm
