// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkd/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "qkd/core/error.hpp"

namespace qkd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string num(double v) { return fmt("%.6f", v); }
std::string short_num(double v) { return fmt("%g", v); }

template <typename V>
V label_or(const json& labels, const char* key, V fallback) {
  if (!labels.contains(key) || labels.at(key).is_null()) return fallback;
  return labels.at(key).get<V>();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Constant-lambda labels sort numerically ahead of the schedule.
std::tuple<int, double, double, int, double, std::string> sort_key(const CellSummary& c) {
  const std::string l = c.lambda();
  const bool gslr = l == "gslr";
  const double lv = gslr || l.empty() ? 0.0 : std::stod(l);
  return {c.kind() == "hd" ? 0 : 1, c.width(), c.tau(), gslr ? 1 : 0, lv, c.config_hash};
}

std::string student_key(const json& labels) {
  return label_or<std::string>(labels, "student_family", "") + "/" +
         short_num(label_or<double>(labels, "student_width", 0.0)) + "/" +
         std::to_string(label_or<int>(labels, "bits", 0));
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::string CellSummary::kind() const { return label_or<std::string>(labels, "kind", ""); }
double CellSummary::width() const { return label_or<double>(labels, "width", 0.0); }
double CellSummary::tau() const { return label_or<double>(labels, "tau", 0.0); }
std::string CellSummary::lambda() const { return label_or<std::string>(labels, "lambda", ""); }

std::vector<CellSummary> summarize(const std::vector<RunRecord>& records) {
  std::map<std::string, std::vector<const RunRecord*>> groups;
  for (const auto& r : records) groups[r.config_hash].push_back(&r);
  std::vector<CellSummary> out;
  for (const auto& [hash, runs] : groups) {
    CellSummary c;
    c.config_hash = hash;
    c.labels = runs.front()->labels;
    std::vector<double> acc;
    double train = 0.0;
    for (const RunRecord* r : runs) {
      if (r->ok()) {
        acc.push_back(r->final_test_accuracy);
        train += r->final_train_accuracy;
      } else {
        ++c.failed;
      }
    }
    c.n = acc.size();
    if (c.n > 0) {
      for (double a : acc) c.mean += a;
      c.mean /= static_cast<double>(c.n);
      c.mean_train = train / static_cast<double>(c.n);
    }
    if (c.n > 1) {
      double ss = 0.0;
      for (double a : acc) ss += (a - c.mean) * (a - c.mean);
      c.stddev = std::sqrt(ss / static_cast<double>(c.n - 1));
    }
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const CellSummary& a, const CellSummary& b) { return sort_key(a) < sort_key(b); });
  return out;
}

const CellSummary* matching_baseline(const std::vector<CellSummary>& cells, const CellSummary& cell) {
  const std::string key = student_key(cell.labels);
  for (const auto& c : cells) {
    if (c.kind() == "hd" && c.n > 0 && student_key(c.labels) == key) return &c;
  }
  return nullptr;
}

void write_runs_csv(const std::vector<RunRecord>& records, std::ostream& out) {
  out << "config_hash,seed,status,kind,width,tau,lambda,bits,epochs,final_train_accuracy,final_test_accuracy\n";
  std::vector<const RunRecord*> sorted;
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const RunRecord* a, const RunRecord* b) {
    return std::tie(a->config_hash, a->seed) < std::tie(b->config_hash, b->seed);
  });
  for (const RunRecord* r : sorted) {
    const json& l = r->labels;
    out << r->config_hash << ',' << r->seed << ',' << r->status << ',' << label_or<std::string>(l, "kind", "")
        << ',' << (l.contains("width") ? short_num(l.at("width").get<double>()) : "") << ','
        << (l.contains("tau") ? short_num(l.at("tau").get<double>()) : "") << ','
        << csv_field(label_or<std::string>(l, "lambda", "")) << ',' << label_or<int>(l, "bits", 0) << ','
        << r->epochs.size() << ',' << num(r->final_train_accuracy) << ',' << num(r->final_test_accuracy) << '\n';
  }
}

void write_summary_csv(const std::vector<CellSummary>& cells, std::ostream& out) {
  out << "config_hash,kind,width,tau,lambda,bits,n,failed,mean_test_accuracy,stddev_test_accuracy,"
         "mean_train_accuracy\n";
  for (const auto& c : cells) {
    const bool kd = c.kind() == "kd";
    out << c.config_hash << ',' << c.kind() << ',' << (kd ? short_num(c.width()) : "") << ','
        << (kd ? short_num(c.tau()) : "") << ',' << csv_field(c.lambda()) << ',' << label_or<int>(c.labels, "bits", 0)
        << ',' << c.n << ',' << c.failed << ',' << num(c.mean) << ',' << num(c.stddev) << ',' << num(c.mean_train)
        << '\n';
  }
}

void write_fig3_csv(const std::vector<CellSummary>& cells, std::ostream& out) {
  out << "width,tau,lambda,mean_test_accuracy,stddev_test_accuracy,n,hd_mean_test_accuracy\n";
  for (const auto& c : cells) {
    if (c.kind() != "kd" || c.lambda() == "gslr" || c.n == 0) continue;
    const CellSummary* hd = matching_baseline(cells, c);
    out << short_num(c.width()) << ',' << short_num(c.tau()) << ',' << c.lambda() << ',' << num(c.mean) << ','
        << num(c.stddev) << ',' << c.n << ',' << (hd ? num(hd->mean) : "") << '\n';
  }
}

void write_fig4_csv(const std::vector<CellSummary>& cells, std::ostream& out) {
  out << "width,tau,policy,mean_test_accuracy,stddev_test_accuracy,n,hd_mean_test_accuracy,delta_vs_hd\n";
  for (const auto& c : cells) {
    if (c.kind() != "kd" || c.n == 0) continue;
    const CellSummary* hd = matching_baseline(cells, c);
    const std::string policy = c.lambda() == "gslr" ? "gslr" : "constant_" + c.lambda();
    out << short_num(c.width()) << ',' << short_num(c.tau()) << ',' << policy << ',' << num(c.mean) << ','
        << num(c.stddev) << ',' << c.n << ',' << (hd ? num(hd->mean) : "") << ','
        << (hd ? num(c.mean - hd->mean) : "") << '\n';
  }
}

void write_markdown_table(const std::vector<CellSummary>& cells, std::ostream& out) {
  out << "| teacher width | tau | lambda | bits | test accuracy (%) | n | vs HD |\n";
  out << "|---:|---:|:---|---:|:---|---:|---:|\n";
  for (const auto& c : cells) {
    const bool kd = c.kind() == "kd";
    const CellSummary* hd = kd ? matching_baseline(cells, c) : nullptr;
    out << "| " << (kd ? short_num(c.width()) : "HD") << " | " << (kd ? short_num(c.tau()) : "-") << " | "
        << (kd ? c.lambda() : "-") << " | " << label_or<int>(c.labels, "bits", 0) << " | "
        << fmt("%.2f", 100.0 * c.mean) << " ± " << fmt("%.2f", 100.0 * c.stddev) << " | " << c.n;
    if (c.failed > 0) out << " (+" << c.failed << " failed)";
    out << " | " << (hd ? fmt("%+.2f", 100.0 * (c.mean - hd->mean)) : "-") << " |\n";
  }
}

std::string render_svg(const LineChart& chart) {
  const double w = 640, h = 400, left = 70, right = 170, top = 40, bottom = 60;
  const double pw = w - left - right, ph = h - top - bottom;
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& s : chart.series) {
    for (const auto& y : s.ys) {
      if (y) {
        lo = std::min(lo, *y);
        hi = std::max(hi, *y);
      }
    }
  }
  if (chart.baseline) {
    lo = std::min(lo, *chart.baseline);
    hi = std::max(hi, *chart.baseline);
  }
  if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
  if (hi - lo < 1e-9) lo -= 0.005, hi += 0.005;
  const double pad = 0.08 * (hi - lo);
  lo -= pad;
  hi += pad;
  const std::size_t nx = std::max<std::size_t>(1, chart.x_ticks.size());
  auto xpos = [&](std::size_t i) { return left + (nx == 1 ? pw / 2 : pw * static_cast<double>(i) / static_cast<double>(nx - 1)); };
  auto ypos = [&](double v) { return top + ph * (hi - v) / (hi - lo); };
  auto p2 = [](double v) { return fmt("%.2f", v); };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + p2(w) + "\" height=\"" + p2(h) + "\" viewBox=\"0 0 " +
       p2(w) + " " + p2(h) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + p2(left + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
       xml_escape(chart.title) + "</text>\n";
  s += "<rect x=\"" + p2(left) + "\" y=\"" + p2(top) + "\" width=\"" + p2(pw) + "\" height=\"" + p2(ph) +
       "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double v = lo + (hi - lo) * t / 5.0;
    s += "<line x1=\"" + p2(left - 4) + "\" y1=\"" + p2(ypos(v)) + "\" x2=\"" + p2(left) + "\" y2=\"" + p2(ypos(v)) +
         "\" stroke=\"#444\"/>\n";
    s += "<text x=\"" + p2(left - 8) + "\" y=\"" + p2(ypos(v) + 4) + "\" text-anchor=\"end\">" + fmt("%.2f", 100.0 * v) +
         "</text>\n";
  }
  for (std::size_t i = 0; i < chart.x_ticks.size(); ++i) {
    s += "<text x=\"" + p2(xpos(i)) + "\" y=\"" + p2(top + ph + 18) + "\" text-anchor=\"middle\">" +
         xml_escape(chart.x_ticks[i]) + "</text>\n";
  }
  s += "<text x=\"" + p2(left + pw / 2) + "\" y=\"" + p2(h - 14) + "\" text-anchor=\"middle\">" +
       xml_escape(chart.x_label) + "</text>\n";
  s += "<text x=\"18\" y=\"" + p2(top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
       p2(top + ph / 2) + ")\">" + xml_escape(chart.y_label) + "</text>\n";
  if (chart.baseline) {
    const double y = ypos(*chart.baseline);
    s += "<line class=\"baseline\" x1=\"" + p2(left) + "\" y1=\"" + p2(y) + "\" x2=\"" + p2(left + pw) + "\" y2=\"" +
         p2(y) + "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + p2(left + pw + 6) + "\" y=\"" + p2(y + 4) + "\">" + xml_escape(chart.baseline_label) +
         "</text>\n";
  }
  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const auto& ser = chart.series[k];
    const std::string color = kPalette[k % (sizeof(kPalette) / sizeof(kPalette[0]))];
    std::string pts;
    for (std::size_t i = 0; i < ser.ys.size() && i < nx; ++i) {
      if (!ser.ys[i]) continue;
      if (!pts.empty()) pts += ' ';
      pts += p2(xpos(i)) + "," + p2(ypos(*ser.ys[i]));
    }
    s += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\"" +
         (ser.dashed ? " stroke-dasharray=\"5,3\"" : "") + "/>\n";
    for (std::size_t i = 0; i < ser.ys.size() && i < nx; ++i) {
      if (ser.ys[i]) {
        s += "<circle cx=\"" + p2(xpos(i)) + "\" cy=\"" + p2(ypos(*ser.ys[i])) + "\" r=\"3\" fill=\"" + color + "\"/>\n";
      }
    }
    const double ly = top + 12 + 18.0 * static_cast<double>(k);
    s += "<line x1=\"" + p2(left + pw + 10) + "\" y1=\"" + p2(ly - 4) + "\" x2=\"" + p2(left + pw + 30) + "\" y2=\"" +
         p2(ly - 4) + "\" stroke=\"" + color + "\" stroke-width=\"1.5\"" +
         (ser.dashed ? " stroke-dasharray=\"5,3\"" : "") + "/>\n";
    s += "<text x=\"" + p2(left + pw + 34) + "\" y=\"" + p2(ly) + "\">" + xml_escape(ser.name) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

namespace {

std::vector<double> kd_widths(const std::vector<CellSummary>& cells) {
  std::vector<double> w;
  for (const auto& c : cells) {
    if (c.kind() == "kd" && std::find(w.begin(), w.end(), c.width()) == w.end()) w.push_back(c.width());
  }
  std::sort(w.begin(), w.end());
  return w;
}

LineChart width_chart(const std::vector<CellSummary>& cells, bool include_gslr, const std::string& title) {
  LineChart chart;
  chart.title = title;
  chart.x_label = "teacher width factor";
  chart.y_label = "test accuracy (%)";
  const auto widths = kd_widths(cells);
  for (double w : widths) chart.x_ticks.push_back(short_num(w));
  std::map<std::tuple<int, double, std::string>, ChartSeries> series;
  const CellSummary* hd = nullptr;
  for (const auto& c : cells) {
    if (c.kind() != "kd" || c.n == 0) continue;
    const bool gslr = c.lambda() == "gslr";
    if (gslr && !include_gslr) continue;
    if (!hd) hd = matching_baseline(cells, c);
    auto& s = series[{gslr ? 1 : 0, c.tau(), c.lambda()}];
    if (s.ys.empty()) {
      s.ys.assign(widths.size(), std::nullopt);
      s.name = (gslr ? std::string("GSLR") : "lambda=" + c.lambda()) + " tau=" + short_num(c.tau());
      s.dashed = include_gslr && !gslr;
    }
    const auto pos = std::find(widths.begin(), widths.end(), c.width()) - widths.begin();
    s.ys[static_cast<std::size_t>(pos)] = c.mean;
  }
  for (auto& [_, s] : series) chart.series.push_back(std::move(s));
  if (hd) chart.baseline = hd->mean;
  return chart;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

}  // namespace

std::vector<fs::path> write_report(const std::vector<RunRecord>& records, const fs::path& out_dir,
                                   const ReportFormats& formats) {
  if (records.empty()) throw UsageError("report: no records selected");
  fs::create_directories(out_dir);
  const auto cells = summarize(records);
  std::vector<fs::path> written;
  auto emit = [&](const std::string& name, auto&& writer) {
    std::ostringstream os;
    writer(os);
    write_file(out_dir / name, os.str());
    written.push_back(out_dir / name);
  };
  if (formats.csv) {
    emit("runs.csv", [&](std::ostream& o) { write_runs_csv(records, o); });
    emit("summary.csv", [&](std::ostream& o) { write_summary_csv(cells, o); });
    emit("fig3_width_tau.csv", [&](std::ostream& o) { write_fig3_csv(cells, o); });
    emit("fig4_gslr.csv", [&](std::ostream& o) { write_fig4_csv(cells, o); });
  }
  if (formats.svg) {
    emit("fig3_width_tau.svg", [&](std::ostream& o) {
      o << render_svg(width_chart(cells, false, "Student accuracy by teacher width and temperature"));
    });
    emit("fig4_gslr.svg", [&](std::ostream& o) {
      o << render_svg(width_chart(cells, true, "Constant lambda versus GSLR"));
    });
  }
  if (formats.markdown) emit("table.md", [&](std::ostream& o) { write_markdown_table(cells, o); });
  return written;
}

}  // namespace qkd
