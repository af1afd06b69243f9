// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dafkit/io/report_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "dafkit/io/atomic_file.hpp"

namespace dafkit {

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

double parse_double(const std::string& s) {
  if (s == "nan" || s == "-nan") return std::nan("");
  double out = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size())
    throw std::invalid_argument("metrics.csv: bad number '" + s + "'");
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  fields.push_back(field);
  return fields;
}

}  // namespace

void write_metrics_csv(const std::filesystem::path& path,
                       const ExperimentReport& report) {
  std::ostringstream out;
  out << "dataset,method,q,trial,accuracy,steps_to_best\n";
  for (const auto& c : report.cells) {
    out << c.dataset << ',' << c.method << ',' << c.q << ',' << c.trial << ','
        << (c.ok ? fmt(c.accuracy) : "nan") << ',' << c.steps_to_best << '\n';
  }
  atomic_write_file(path, out.str());
}

ExperimentReport read_metrics_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file_text(path));
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument("metrics.csv: empty file");
  if (split_csv_line(line) !=
      std::vector<std::string>{"dataset", "method", "q", "trial", "accuracy",
                               "steps_to_best"})
    throw std::invalid_argument("metrics.csv: unexpected header");

  ExperimentReport report;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 6)
      throw std::invalid_argument("metrics.csv: bad row '" + line + "'");
    CellResult c;
    c.dataset = f[0];
    c.method = f[1];
    c.q = std::stoi(f[2]);
    c.trial = std::stoi(f[3]);
    c.accuracy = parse_double(f[4]);
    c.steps_to_best = std::stoi(f[5]);
    c.ok = std::isfinite(c.accuracy);
    c.index_audit_ok = c.ok;
    if (!c.ok) c.error = "recorded failure";
    report.cells.push_back(std::move(c));
  }
  if (report.cells.empty())
    throw std::invalid_argument("metrics.csv: no rows");

  report.dataset = report.cells.front().dataset;
  for (const auto& c : report.cells) {
    if (std::find(report.q_grid.begin(), report.q_grid.end(), c.q) ==
        report.q_grid.end())
      report.q_grid.push_back(c.q);
    report.trials = std::max(report.trials, c.trial + 1);
  }
  std::sort(report.q_grid.begin(), report.q_grid.end());
  summarize_report(report);
  return report;
}

void write_summary_csv(const std::filesystem::path& path,
                       const ExperimentReport& report) {
  std::ostringstream out;
  out << "method,auc,auc_ci_low,auc_ci_high,normalized_score\n";
  for (const auto& s : report.summaries) {
    out << s.method << ',' << fmt(s.auc_mean) << ',' << fmt(s.auc_ci_low)
        << ',' << fmt(s.auc_ci_high) << ',' << fmt(s.normalized_score)
        << '\n';
  }
  atomic_write_file(path, out.str());
}

namespace {

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                         "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

void write_curves_svg(const std::filesystem::path& path,
                      const ExperimentReport& report) {
  const int width = 640, height = 420;
  const double mx = 70, my = 40;  // margins
  const double pw = width - 2 * mx, ph = height - 2 * my;

  if (report.q_grid.size() < 2 || report.cells.empty()) return;
  const double x_lo = std::log2(report.q_grid.front());
  const double x_hi = std::log2(report.q_grid.back());

  auto sx = [&](double q) {
    return mx + (std::log2(q) - x_lo) / (x_hi - x_lo) * pw;
  };
  auto sy = [&](double acc) { return my + (1.0 - acc) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Axes and grid.
  for (double acc = 0.0; acc <= 1.001; acc += 0.25) {
    svg << "<line x1=\"" << mx << "\" y1=\"" << sy(acc) << "\" x2=\""
        << mx + pw << "\" y2=\"" << sy(acc)
        << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << mx - 8 << "\" y=\"" << sy(acc) + 4
        << "\" font-size=\"11\" text-anchor=\"end\">" << acc << "</text>\n";
  }
  for (int q : report.q_grid) {
    svg << "<line x1=\"" << sx(q) << "\" y1=\"" << my << "\" x2=\"" << sx(q)
        << "\" y2=\"" << my + ph
        << "\" stroke=\"#eeeeee\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << sx(q) << "\" y=\"" << my + ph + 16
        << "\" font-size=\"11\" text-anchor=\"middle\">" << q << "</text>\n";
  }
  svg << "<text x=\"" << mx + pw / 2 << "\" y=\"" << height - 6
      << "\" font-size=\"12\" text-anchor=\"middle\">examples per class"
      << "</text>\n";
  svg << "<text x=\"16\" y=\"" << my + ph / 2
      << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 "
      << 16 << ' ' << my + ph / 2 << ")\">validation accuracy</text>\n";

  std::vector<std::string> methods;
  for (const auto& c : report.cells)
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end())
      methods.push_back(c.method);

  int color_idx = 0;
  for (const auto& method : methods) {
    const char* color = kColors[color_idx % 6];
    ++color_idx;

    // CI band.
    std::ostringstream upper, lower;
    bool have_band = true;
    for (int q : report.q_grid) {
      const auto acc = report.accuracies(method, q);
      if (acc.size() < 2) {
        have_band = false;
        break;
      }
      const auto ci = confidence_interval_68(acc);
      upper << sx(q) << ',' << sy(ci.high) << ' ';
      lower << sx(q) << ',' << sy(ci.low) << ' ';
    }
    if (have_band) {
      std::string lower_rev;
      {
        std::istringstream ls(lower.str());
        std::vector<std::string> pts;
        std::string p;
        while (ls >> p) pts.push_back(p);
        for (auto it = pts.rbegin(); it != pts.rend(); ++it)
          lower_rev += *it + " ";
      }
      svg << "<polygon points=\"" << upper.str() << lower_rev
          << "\" fill=\"" << color << "\" fill-opacity=\"0.15\" "
          << "stroke=\"none\"/>\n";
    }

    // Mean line.
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\" points=\"";
    for (const auto& [q, acc] : report.curve(method))
      svg << sx(q) << ',' << sy(acc) << ' ';
    svg << "\"/>\n";

    // Legend entry.
    const double ly = my + 16 * color_idx;
    svg << "<line x1=\"" << mx + pw - 150 << "\" y1=\"" << ly << "\" x2=\""
        << mx + pw - 130 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << mx + pw - 124 << "\" y=\"" << ly + 4
        << "\" font-size=\"11\">" << method << "</text>\n";
  }
  svg << "</svg>\n";
  atomic_write_file(path, svg.str());
}

}  // namespace dafkit
