#include "xqm/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "xqm/io.hpp"

namespace xqm::report {

std::string tool_version() { return XQM_VERSION; }

std::string tsv_meta_line(const Meta& meta) {
  return "# xqm " + tool_version() + " stage=" + meta.stage + " inputs=" + meta.inputs_hash +
         " seed=" + std::to_string(meta.seed) + " rng=" + std::string(kRngAlgorithm) + "\n";
}

std::string jsonl_meta_line(const Meta& meta) {
  nlohmann::ordered_json j;
  j["meta"] = {{"tool", "xqm"},
               {"version", tool_version()},
               {"stage", meta.stage},
               {"inputs", meta.inputs_hash},
               {"seed", meta.seed},
               {"rng", std::string(kRngAlgorithm)}};
  return j.dump() + "\n";
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

std::string svg_line_chart(const std::string& title, const std::string& y_label,
                           const Series& series, const Meta& meta) {
  constexpr double kW = 640, kH = 400, kLeft = 70, kRight = 130, kTop = 40, kBottom = 50;
  int x_min = 0, x_max = 1;
  double y_min = 0, y_max = 1;
  bool first = true;
  for (const auto& [_, pts] : series) {
    for (const auto& [x, y] : pts) {
      if (first) {
        x_min = x_max = x;
        y_min = y_max = y;
        first = false;
      }
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }
  if (x_max == x_min) x_max = x_min + 1;
  if (y_max == y_min) {
    y_min -= 1;
    y_max += 1;
  }
  const double pad = (y_max - y_min) * 0.05;
  y_min -= pad;
  y_max += pad;
  const double plot_w = kW - kLeft - kRight;
  const double plot_h = kH - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double y) { return kTop + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
         "font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<!-- xqm " + tool_version() + " stage=" + meta.stage + " inputs=" + meta.inputs_hash +
         " seed=" + std::to_string(meta.seed) + " -->\n";
  out += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  out += "<text x=\"" + fixed(kW / 2, 1) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
         xml_escape(title) + "</text>\n";
  // axes
  out += "<line x1=\"" + fixed(kLeft, 1) + "\" y1=\"" + fixed(kTop + plot_h, 1) + "\" x2=\"" +
         fixed(kLeft + plot_w, 1) + "\" y2=\"" + fixed(kTop + plot_h, 1) +
         "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + fixed(kLeft, 1) + "\" y1=\"" + fixed(kTop, 1) + "\" x2=\"" +
         fixed(kLeft, 1) + "\" y2=\"" + fixed(kTop + plot_h, 1) + "\" stroke=\"black\"/>\n";
  for (int x = x_min; x <= x_max; ++x) {
    out += "<text x=\"" + fixed(px(x), 1) + "\" y=\"" + fixed(kTop + plot_h + 18, 1) +
           "\" text-anchor=\"middle\">" + std::to_string(x) + "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double y = y_min + (y_max - y_min) * i / 4.0;
    out += "<text x=\"" + fixed(kLeft - 6, 1) + "\" y=\"" + fixed(py(y) + 4, 1) +
           "\" text-anchor=\"end\">" + fixed(y, 2) + "</text>\n";
  }
  out += "<text x=\"" + fixed(kLeft + plot_w / 2, 1) + "\" y=\"" + fixed(kH - 10, 1) +
         "\" text-anchor=\"middle\">quality level (errors per segment)</text>\n";
  out += "<text x=\"16\" y=\"" + fixed(kTop + plot_h / 2, 1) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " + fixed(kTop + plot_h / 2, 1) +
         ")\">" + xml_escape(y_label) + "</text>\n";

  std::size_t idx = 0;
  for (const auto& [name, pts] : series) {
    const char* color = kPalette[idx % std::size(kPalette)];
    std::string points;
    for (const auto& [x, y] : pts) {
      if (!points.empty()) points += ' ';
      points += fixed(px(x), 2) + "," + fixed(py(y), 2);
    }
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"2\" points=\"" + points + "\"/>\n";
    const double ly = kTop + 10 + 18.0 * static_cast<double>(idx);
    out += "<line x1=\"" + fixed(kW - kRight + 10, 1) + "\" y1=\"" + fixed(ly, 1) + "\" x2=\"" +
           fixed(kW - kRight + 30, 1) + "\" y2=\"" + fixed(ly, 1) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + fixed(kW - kRight + 36, 1) + "\" y=\"" + fixed(ly + 4, 1) + "\">" +
           xml_escape(name) + "</text>\n";
    ++idx;
  }
  out += "</svg>\n";
  return out;
}

std::string correlation_table(const std::vector<CorrelationReport>& reports, const Meta& meta) {
  std::vector<std::string> metrics;
  std::set<std::pair<int, std::string>> rows;
  std::map<std::tuple<int, std::string, std::string>, double> cells;
  for (const auto& r : reports) {
    if (std::find(metrics.begin(), metrics.end(), r.metric) == metrics.end()) {
      metrics.push_back(r.metric);
    }
    const std::string g(to_string(r.granularity));
    rows.insert({r.num_languages, g});
    cells[{r.num_languages, g, r.metric}] = r.tau;
  }
  std::string out = tsv_meta_line(meta);
  out += "# kendall tau-b; human score = -MQM deduction\n";
  out += "num_languages\tgranularity";
  for (const auto& m : metrics) out += "\t" + m;
  out += "\n";
  for (const auto& g : {std::string("system"), std::string("triplet")}) {
    for (const auto& [n, gran] : rows) {
      if (gran != g) continue;
      out += std::to_string(n) + "\t" + gran;
      for (const auto& m : metrics) {
        const auto it = cells.find({n, gran, m});
        out += "\t" + (it == cells.end() ? std::string("NA") : fixed(it->second, 4));
      }
      out += "\n";
    }
  }
  return out;
}

std::string cv_table(const std::vector<CvReport>& reports, const Meta& meta) {
  std::vector<std::string> metrics;
  std::set<int> levels;
  std::map<std::pair<std::string, int>, double> cells;
  for (const auto& r : reports) {
    if (std::find(metrics.begin(), metrics.end(), r.metric) == metrics.end()) {
      metrics.push_back(r.metric);
    }
    levels.insert(r.level);
    cells[{r.metric, r.level}] = r.cv_percent;
  }
  std::string out = tsv_meta_line(meta);
  out += "# cross-lingual coefficient of variation (%), sample std\n";
  out += "metric";
  for (int l : levels) out += "\tlevel_" + std::to_string(l);
  out += "\n";
  for (const auto& m : metrics) {
    out += m;
    for (int l : levels) {
      const auto it = cells.find({m, l});
      out += "\t" + (it == cells.end() ? std::string("NA") : fixed(it->second, 2));
    }
    out += "\n";
  }
  return out;
}

}  // namespace xqm::report
