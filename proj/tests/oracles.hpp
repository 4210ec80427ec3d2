#pragma once

// Brute-force reference implementations. These deliberately avoid the
// library's algorithms: subsets via bitmasks, overlap via explicit footprints,
// n-grams via maps of substrings, tau via all pairs, p-values via quadrature.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  std::u32string replacement;
};

// A range edit covers the code points start..end-1. An insertion sits in the
// gap before code point `start`; it collides with another insertion at the
// same gap or with a range that covers code points on both sides of the gap.
inline bool collide(const Span& a, const Span& b) {
  auto covered = [](const Span& s) {
    std::set<std::size_t> pts;
    for (std::size_t i = s.start; i < s.end; ++i) pts.insert(i);
    return pts;
  };
  const bool a_ins = a.start == a.end;
  const bool b_ins = b.start == b.end;
  if (a_ins && b_ins) return a.start == b.start;
  if (a_ins || b_ins) {
    const Span& ins = a_ins ? a : b;
    const auto pts = covered(a_ins ? b : a);
    return ins.start > 0 && pts.count(ins.start - 1) && pts.count(ins.start);
  }
  const auto pa = covered(a);
  for (std::size_t p : covered(b)) {
    if (pa.count(p)) return true;
  }
  return false;
}

// Splices right to left so earlier offsets stay valid.
inline std::u32string splice(std::u32string base, std::vector<Span> spans) {
  std::sort(spans.begin(), spans.end(), [](const Span& x, const Span& y) {
    return x.start != y.start ? x.start > y.start : x.end > y.end;
  });
  for (const auto& s : spans) base = base.substr(0, s.start) + s.replacement + base.substr(s.end);
  return base;
}

// Every subset of size <= k_max without a colliding pair, as (size, text).
inline std::multiset<std::pair<int, std::u32string>> enumerate(const std::u32string& base,
                                                               const std::vector<Span>& spans,
                                                               int k_max) {
  std::multiset<std::pair<int, std::u32string>> out;
  const std::size_t n = spans.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    std::vector<Span> chosen;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1) chosen.push_back(spans[i]);
    }
    if (static_cast<int>(chosen.size()) > k_max) continue;
    bool ok = true;
    for (std::size_t i = 0; i < chosen.size() && ok; ++i) {
      for (std::size_t j = i + 1; j < chosen.size() && ok; ++j) ok = !collide(chosen[i], chosen[j]);
    }
    if (ok) out.insert({static_cast<int>(chosen.size()), splice(base, chosen)});
  }
  return out;
}

// chrF: clipped n-gram matches per order, uniform average of precision and
// recall over orders present in either string, then F_beta.
inline std::map<std::u32string, int> ngrams(const std::vector<std::u32string>& units, int n,
                                            bool join_with_space) {
  std::map<std::u32string, int> out;
  if (static_cast<int>(units.size()) < n) return out;
  for (std::size_t i = 0; i + n <= units.size(); ++i) {
    std::u32string key;
    for (int j = 0; j < n; ++j) {
      if (j > 0 && join_with_space) key += U' ';
      key += units[i + j];
    }
    ++out[key];
  }
  return out;
}

inline bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\v' || c == U'\f';
}

inline double chrf(const std::u32string& hyp, const std::u32string& ref, int char_n, int word_n,
                   double beta) {
  auto chars = [](const std::u32string& s) {
    std::vector<std::u32string> out;
    for (char32_t c : s) {
      if (!is_space(c)) out.push_back(std::u32string(1, c));
    }
    return out;
  };
  auto words = [](const std::u32string& s) {
    std::vector<std::u32string> out;
    std::u32string cur;
    for (char32_t c : s) {
      if (is_space(c)) {
        if (!cur.empty()) out.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
  };
  double p_sum = 0, r_sum = 0;
  int orders = 0;
  auto add_order = [&](const std::map<std::u32string, int>& h, const std::map<std::u32string, int>& r) {
    int h_total = 0, r_total = 0, match = 0;
    for (const auto& [g, c] : h) h_total += c;
    for (const auto& [g, c] : r) r_total += c;
    if (h_total == 0 && r_total == 0) return;
    for (const auto& [g, c] : h) {
      auto it = r.find(g);
      if (it != r.end()) match += std::min(c, it->second);
    }
    p_sum += h_total ? static_cast<double>(match) / h_total : 0.0;
    r_sum += r_total ? static_cast<double>(match) / r_total : 0.0;
    ++orders;
  };
  const auto hc = chars(hyp), rc = chars(ref);
  for (int n = 1; n <= char_n; ++n) add_order(ngrams(hc, n, false), ngrams(rc, n, false));
  const auto hw = words(hyp), rw = words(ref);
  for (int n = 1; n <= word_n; ++n) add_order(ngrams(hw, n, true), ngrams(rw, n, true));
  if (orders == 0) return 0.0;
  const double p = p_sum / orders, r = r_sum / orders;
  const double b2 = beta * beta;
  if (p == 0 && r == 0) return 0.0;
  return 100.0 * (1 + b2) * p * r / (b2 * p + r);
}

// tau-b straight from the definition over all pairs.
inline double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
  long long concordant = 0, discordant = 0, tie_x_only = 0, tie_y_only = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0 && dy == 0) continue;
      if (dx == 0) ++tie_x_only;
      else if (dy == 0) ++tie_y_only;
      else if ((dx > 0) == (dy > 0)) ++concordant;
      else ++discordant;
    }
  }
  const double denom = std::sqrt(static_cast<double>(concordant + discordant + tie_x_only) *
                                 static_cast<double>(concordant + discordant + tie_y_only));
  return static_cast<double>(concordant - discordant) / denom;
}

// Two-tailed p of Student's t: 1 - 2 * integral_0^|t| of the density,
// composite Simpson with a fine fixed grid.
inline double t_two_tailed(double t, double df) {
  const double log_c = std::lgamma((df + 1) / 2) - std::lgamma(df / 2) - 0.5 * std::log(df * M_PI);
  auto density = [&](double x) { return std::exp(log_c - (df + 1) / 2 * std::log1p(x * x / df)); };
  const double a = 0, b = std::fabs(t);
  const int n = 200000;
  const double h = (b - a) / n;
  double s = density(a) + density(b);
  for (int i = 1; i < n; ++i) s += density(a + i * h) * (i % 2 ? 4 : 2);
  const double integral = s * h / 3;
  return 1.0 - 2.0 * integral;
}

}  // namespace oracle
