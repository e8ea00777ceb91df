#pragma once

// Minimal deterministic SVG renderer for 2D regions and sample overlays:
// fixed canvas, axes with ticks, filled polygons, point markers, and a
// legend. Output bytes depend only on the input series.

#include <algorithm>
#include <array>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "flexor/common.hpp"

namespace flexor {

struct SvgSeries {
  std::string label;
  std::string color = "#1f6fb4";
  std::vector<std::array<double, 2>> polygon;  // closed outline, may be empty
  std::vector<std::array<double, 2>> points;   // scatter markers
};

struct SvgPlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<SvgSeries> series;
};

namespace detail {

inline std::string svg_num(double v) {
  if (v == 0.0) v = 0.0;  // collapse negative zero
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (const char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace detail

inline std::string render_svg(const SvgPlot& plot) {
  constexpr double width = 720.0, height = 540.0;
  constexpr double ml = 78.0, mr = 24.0, mt = 46.0, mb = 62.0;
  const double px = width - ml - mr;
  const double py = height - mt - mb;

  // Data bounds with padding; an empty plot gets the unit box.
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  double ylo = xlo, yhi = -xlo;
  for (const SvgSeries& s : plot.series) {
    for (const auto& p : s.polygon) {
      xlo = std::min(xlo, p[0]); xhi = std::max(xhi, p[0]);
      ylo = std::min(ylo, p[1]); yhi = std::max(yhi, p[1]);
    }
    for (const auto& p : s.points) {
      xlo = std::min(xlo, p[0]); xhi = std::max(xhi, p[0]);
      ylo = std::min(ylo, p[1]); yhi = std::max(yhi, p[1]);
    }
  }
  if (!(xlo <= xhi)) { xlo = 0.0; xhi = 1.0; ylo = 0.0; yhi = 1.0; }
  if (xhi - xlo < 1e-12) { xlo -= 0.5; xhi += 0.5; }
  if (yhi - ylo < 1e-12) { ylo -= 0.5; yhi += 0.5; }
  const double xpad = 0.06 * (xhi - xlo), ypad = 0.06 * (yhi - ylo);
  xlo -= xpad; xhi += xpad; ylo -= ypad; yhi += ypad;

  const auto sx = [&](double x) { return ml + (x - xlo) / (xhi - xlo) * px; };
  const auto sy = [&](double y) { return mt + (yhi - y) / (yhi - ylo) * py; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         detail::svg_num(width) + "\" height=\"" + detail::svg_num(height) +
         "\" viewBox=\"0 0 " + detail::svg_num(width) + " " +
         detail::svg_num(height) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!plot.title.empty())
    out += "<text x=\"" + detail::svg_num(width / 2) +
           "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"16\">" +
           detail::svg_escape(plot.title) + "</text>\n";

  // Grid and ticks: five evenly spaced lines per axis.
  for (int i = 0; i <= 4; ++i) {
    const double xv = xlo + (xhi - xlo) * i / 4.0;
    const double yv = ylo + (yhi - ylo) * i / 4.0;
    const double gx = sx(xv), gy = sy(yv);
    out += "<line x1=\"" + detail::svg_num(gx) + "\" y1=\"" +
           detail::svg_num(mt) + "\" x2=\"" + detail::svg_num(gx) +
           "\" y2=\"" + detail::svg_num(mt + py) +
           "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    out += "<line x1=\"" + detail::svg_num(ml) + "\" y1=\"" +
           detail::svg_num(gy) + "\" x2=\"" + detail::svg_num(ml + px) +
           "\" y2=\"" + detail::svg_num(gy) +
           "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    char lbl[48];
    std::snprintf(lbl, sizeof lbl, "%.4g", xv == 0.0 ? 0.0 : xv);
    out += "<text x=\"" + detail::svg_num(gx) + "\" y=\"" +
           detail::svg_num(mt + py + 18) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">" + lbl + "</text>\n";
    std::snprintf(lbl, sizeof lbl, "%.4g", yv == 0.0 ? 0.0 : yv);
    out += "<text x=\"" + detail::svg_num(ml - 8) + "\" y=\"" +
           detail::svg_num(gy + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">" + lbl + "</text>\n";
  }

  // Axes frame.
  out += "<rect x=\"" + detail::svg_num(ml) + "\" y=\"" + detail::svg_num(mt) +
         "\" width=\"" + detail::svg_num(px) + "\" height=\"" +
         detail::svg_num(py) +
         "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1.2\"/>\n";
  if (!plot.x_label.empty())
    out += "<text x=\"" + detail::svg_num(ml + px / 2) + "\" y=\"" +
           detail::svg_num(height - 16) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"13\">" +
           detail::svg_escape(plot.x_label) + "</text>\n";
  if (!plot.y_label.empty())
    out += "<text x=\"20\" y=\"" + detail::svg_num(mt + py / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"13\" transform=\"rotate(-90 20 " +
           detail::svg_num(mt + py / 2) + ")\">" +
           detail::svg_escape(plot.y_label) + "</text>\n";

  // Series: polygons first (filled), then markers on top.
  for (const SvgSeries& s : plot.series) {
    if (s.polygon.size() >= 2) {
      out += "<polygon points=\"";
      for (std::size_t i = 0; i < s.polygon.size(); ++i) {
        if (i) out += " ";
        out += detail::svg_num(sx(s.polygon[i][0])) + "," +
               detail::svg_num(sy(s.polygon[i][1]));
      }
      out += "\" fill=\"" + s.color + "\" fill-opacity=\"0.18\" stroke=\"" +
             s.color + "\" stroke-width=\"1.8\"/>\n";
    } else if (s.polygon.size() == 1) {
      out += "<circle cx=\"" + detail::svg_num(sx(s.polygon[0][0])) +
             "\" cy=\"" + detail::svg_num(sy(s.polygon[0][1])) +
             "\" r=\"4\" fill=\"none\" stroke=\"" + s.color +
             "\" stroke-width=\"1.8\"/>\n";
    }
  }
  for (const SvgSeries& s : plot.series)
    for (const auto& p : s.points)
      out += "<circle cx=\"" + detail::svg_num(sx(p[0])) + "\" cy=\"" +
             detail::svg_num(sy(p[1])) + "\" r=\"3\" fill=\"" + s.color +
             "\"/>\n";

  // Legend, top-right inside the frame.
  double ly = mt + 14;
  for (const SvgSeries& s : plot.series) {
    if (s.label.empty()) continue;
    const double lx = ml + px - 170;
    out += "<rect x=\"" + detail::svg_num(lx) + "\" y=\"" +
           detail::svg_num(ly - 9) + "\" width=\"14\" height=\"10\" fill=\"" +
           s.color + "\" fill-opacity=\"0.5\" stroke=\"" + s.color +
           "\"/>\n";
    out += "<text x=\"" + detail::svg_num(lx + 20) + "\" y=\"" +
           detail::svg_num(ly) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" +
           detail::svg_escape(s.label) + "</text>\n";
    ly += 17;
  }

  out += "</svg>\n";
  return out;
}

}  // namespace flexor
