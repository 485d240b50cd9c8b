#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "mrbear/errors.hpp"
#include "mrbear/harness.hpp"

namespace mrbear::harness {

namespace {

namespace fs = std::filesystem;

constexpr double kWidth = 760, kHeight = 460;
constexpr double kLeft = 80, kRight = 24, kTop = 40, kBottom = 56;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

struct Series {
  std::vector<std::pair<double, double>> points;
  std::string color;
  double width = 1.0;
  double opacity = 1.0;
  std::string label;
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

void write_chart(const fs::path& path, const std::string& title, const std::string& y_label,
                 double x_max, const std::vector<Series>& series) {
  double y_min = 0.0, y_max = 0.0;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  if (y_max <= y_min) y_max = y_min + 1.0;
  if (x_max <= 0.0) x_max = 1.0;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + pw * x / x_max; };
  auto sy = [&](double y) { return kTop + ph * (1.0 - (y - y_min) / (y_max - y_min)); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\""
      << " data-x-max=\"" << num(x_max) << "\" data-y-min=\"" << num(y_min) << "\" data-y-max=\"" << num(y_max)
      << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(title) << "</text>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = x_max * i / 5.0, yv = y_min + (y_max - y_min) * i / 5.0;
    svg << "<line x1=\"" << num(sx(xv)) << "\" y1=\"" << kTop << "\" x2=\"" << num(sx(xv)) << "\" y2=\""
        << kTop + ph << "\" stroke=\"#eeeeee\"/>\n";
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << num(sy(yv)) << "\" x2=\"" << kLeft + pw << "\" y2=\""
        << num(sy(yv)) << "\" stroke=\"#eeeeee\"/>\n";
    svg << "<text x=\"" << num(sx(xv)) << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">"
        << num(xv) << "</text>\n";
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(sy(yv) + 4) << "\" text-anchor=\"end\">" << num(yv)
        << "</text>\n";
  }
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">t</text>\n";
  svg << "<text transform=\"translate(18," << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(y_label) << "</text>\n";

  double legend_y = kTop + 16;
  for (const auto& s : series) {
    if (s.points.empty()) continue;
    svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"" << s.width
        << "\" stroke-opacity=\"" << s.opacity << "\" points=\"";
    for (const auto& [x, y] : s.points) svg << num(sx(x)) << ',' << num(sy(y)) << ' ';
    svg << "\"/>\n";
    if (!s.label.empty()) {
      svg << "<line x1=\"" << kLeft + 12 << "\" y1=\"" << legend_y - 4 << "\" x2=\"" << kLeft + 36 << "\" y2=\""
          << legend_y - 4 << "\" stroke=\"" << s.color << "\" stroke-width=\"" << s.width << "\"/>\n";
      svg << "<text x=\"" << kLeft + 42 << "\" y=\"" << legend_y << "\">" << escape(s.label) << "</text>\n";
      legend_y += 16;
    }
  }
  svg << "</svg>\n";

  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << svg.str();
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::pair<double, double>> to_points(const std::vector<CurvePoint>& curve, bool normalized) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(curve.size() + 1);
  if (!normalized) pts.emplace_back(0.0, 0.0);
  for (const auto& p : curve) {
    const double t = static_cast<double>(p.t);
    pts.emplace_back(t, normalized ? p.regret / std::sqrt(t) : p.regret);
  }
  return pts;
}

}  // namespace

std::vector<fs::path> emit_plots(const std::vector<RunLog>& logs, const fs::path& out_dir) {
  std::map<std::string, std::vector<const std::vector<CurvePoint>*>> groups;
  double horizon = 0.0;
  for (const auto& log : logs) {
    if (!log.ok || log.curve.empty()) continue;
    groups[log.baseline].push_back(&log.curve);
    horizon = std::max(horizon, static_cast<double>(log.curve.back().t));
  }
  std::vector<fs::path> written;
  if (groups.empty()) {
    std::cerr << "warning: no regret curves to plot\n";
    return written;
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string());

  std::vector<Series> medians_raw, medians_norm;
  std::size_t color = 0;
  for (const auto& [name, curves] : groups) {
    const std::string c = kPalette[color++ % std::size(kPalette)];
    const auto median = median_curve(curves);
    for (bool normalized : {false, true}) {
      std::vector<Series> series;
      if (curves.size() == 1) {
        series.push_back({to_points(*curves.front(), normalized), c, 1.6, 1.0, name});
      } else {
        for (const auto* curve : curves) series.push_back({to_points(*curve, normalized), c, 0.8, 0.35, ""});
        series.push_back({to_points(median, normalized), c, 2.4, 1.0, name + " (median)"});
      }
      const fs::path path = out_dir / ((normalized ? "regret_sqrt_" : "regret_") + name + ".svg");
      write_chart(path, name + (normalized ? ": regret / sqrt(t)" : ": cumulative regret"),
                  normalized ? "regret / sqrt(t)" : "regret", horizon, series);
      written.push_back(path);
    }
    medians_raw.push_back({to_points(median, false), c, 2.0, 1.0, name});
    medians_norm.push_back({to_points(median, true), c, 2.0, 1.0, name});
  }
  written.push_back(out_dir / "regret_medians.svg");
  write_chart(written.back(), "median cumulative regret", "regret", horizon, medians_raw);
  written.push_back(out_dir / "regret_sqrt_medians.svg");
  write_chart(written.back(), "median regret / sqrt(t)", "regret / sqrt(t)", horizon, medians_norm);
  return written;
}

}  // namespace mrbear::harness
