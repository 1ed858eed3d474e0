#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "qtraj/types.hpp"

namespace qtraj {

// Dependency-free SVG emission for diagnostic charts: a polyline plot and a
// histogram. Not a plotting library, just enough to eyeball a run.

struct SvgSeries {
  std::string label;
  std::string color;  // e.g. "#1f6fb2"
  std::vector<double> x;
  std::vector<double> y;
};

inline void write_svg_lines(const std::string& path, const std::string& title,
                            const std::vector<SvgSeries>& series, bool log_y = false) {
  const double W = 640, H = 420, L = 60, R = 20, T = 36, B = 44;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      double yv = log_y ? (s.y[i] > 0 ? std::log10(s.y[i]) : 0.0) : s.y[i];
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, yv);
      ymax = std::max(ymax, yv);
    }
  }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > ymin)) ymax = ymin + 1.0;
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) {
    double yv = log_y ? (y > 0 ? std::log10(y) : ymin) : y;
    return H - B - (yv - ymin) / (ymax - ymin) * (H - T - B);
  };
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StructuralError("svg: cannot open " + path);
  char buf[256];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title
      << "</text>\n";
  // Axes.
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", L, H - B, W - R,
                H - B);
  out << buf;
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", L, T, L, H - B);
  out << buf;
  for (int tick = 0; tick <= 4; ++tick) {
    double fx = xmin + (xmax - xmin) * tick / 4.0;
    double fy = ymin + (ymax - ymin) * tick / 4.0;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\" font-size=\"10\">%.4g</text>\n",
                  px(fx), H - B + 16, fx);
    out << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%g\" y=\"%g\" text-anchor=\"end\" font-size=\"10\">%.4g</text>\n",
                  L - 6, H - B - (H - T - B) * tick / 4.0 + 4,
                  log_y ? std::pow(10.0, fy) : fy);
    out << buf;
  }
  int li = 0;
  for (const auto& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(s.x[i]), py(s.y[i]));
      out << buf;
    }
    out << "\"/>\n";
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%g\" y=\"%g\" font-size=\"11\" fill=\"%s\">%s</text>\n", W - R - 150.0,
                  T + 14.0 * (li + 1), s.color.c_str(), s.label.c_str());
    out << buf;
    ++li;
  }
  out << "</svg>\n";
}

inline void write_svg_histogram(const std::string& path, const std::string& title,
                                const std::vector<double>& bin_lo,
                                const std::vector<double>& bin_hi,
                                const std::vector<double>& density,
                                const std::vector<double>& overlay) {
  const double W = 640, H = 420, L = 60, R = 20, T = 36, B = 44;
  double xmin = bin_lo.front(), xmax = bin_hi.back();
  double ymax = 1e-12;
  for (double d : density) ymax = std::max(ymax, d);
  for (double d : overlay) ymax = std::max(ymax, d);
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - y / ymax * (H - T - B); };
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StructuralError("svg: cannot open " + path);
  char buf[256];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title
      << "</text>\n";
  for (std::size_t i = 0; i < density.size(); ++i) {
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"#77aadd\" "
                  "stroke=\"#335577\" stroke-width=\"0.5\"/>\n",
                  px(bin_lo[i]), py(density[i]), px(bin_hi[i]) - px(bin_lo[i]),
                  py(0.0) - py(density[i]));
    out << buf;
  }
  out << "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < overlay.size(); ++i) {
    double mid = 0.5 * (bin_lo[i] + bin_hi[i]);
    std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(mid), py(overlay[i]));
    out << buf;
  }
  out << "\"/>\n</svg>\n";
}

}  // namespace qtraj
