#include "lrnerv/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace lrnerv {
namespace {

constexpr double kPanelW = 480, kPanelH = 360;
constexpr double kLeft = 64, kRight = 16, kTop = 36, kBottom = 52;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) lo = 0, hi = 1;
    if (hi - lo < 1e-12) {
      const double pad = std::max(std::abs(lo) * 0.05, 0.5);
      lo -= pad;
      hi += pad;
    } else {
      const double pad = 0.05 * (hi - lo);
      lo -= pad;
      hi += pad;
    }
  }
};

void panel(std::ostringstream& os, const PlotPanel& p, double ox) {
  Range xr, yr;
  for (const auto& s : p.series)
    for (const auto& [x, y] : s.points)
      if (std::isfinite(x) && std::isfinite(y)) xr.add(x), yr.add(y);
  xr.finish();
  yr.finish();
  const double pw = kPanelW - kLeft - kRight, ph = kPanelH - kTop - kBottom;
  auto sx = [&](double x) { return ox + kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto sy = [&](double y) { return kTop + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  os << "<g>\n<rect x=\"" << num(ox + kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw)
     << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"#444\"/>\n";
  os << "<text x=\"" << num(ox + kPanelW / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
     << xml_escape(p.title) << "</text>\n";
  os << "<text x=\"" << num(ox + kLeft + pw / 2) << "\" y=\"" << num(kPanelH - 10)
     << "\" text-anchor=\"middle\" font-size=\"12\">" << xml_escape(p.x_label) << "</text>\n";
  os << "<text transform=\"translate(" << num(ox + 14) << "," << num(kTop + ph / 2)
     << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"12\">" << xml_escape(p.y_label) << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xr.lo + (xr.hi - xr.lo) * i / 4.0, yv = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    os << "<text x=\"" << num(sx(xv)) << "\" y=\"" << num(kTop + ph + 16)
       << "\" text-anchor=\"middle\" font-size=\"10\">" << tick(xv) << "</text>\n";
    os << "<text x=\"" << num(ox + kLeft - 4) << "\" y=\"" << num(sy(yv) + 3)
       << "\" text-anchor=\"end\" font-size=\"10\">" << tick(yv) << "</text>\n";
  }
  for (std::size_t si = 0; si < p.series.size(); ++si) {
    const PlotSeries& s = p.series[si];
    const char* color = kPalette[si % std::size(kPalette)];
    std::vector<std::pair<double, double>> pts;
    for (const auto& pt : s.points)
      if (std::isfinite(pt.first) && std::isfinite(pt.second)) pts.push_back(pt);
    if (s.lines && pts.size() > 1) {
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < pts.size(); ++i) os << (i ? " " : "") << num(sx(pts[i].first)) << ',' << num(sy(pts[i].second));
      os << "\"/>\n";
    }
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      const auto& [x, y] = s.points[i];
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      os << "<circle cx=\"" << num(sx(x)) << "\" cy=\"" << num(sy(y)) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
      if (i < s.labels.size() && !s.labels[i].empty()) {
        os << "<text x=\"" << num(sx(x) + 5) << "\" y=\"" << num(sy(y) - 5) << "\" font-size=\"9\">"
           << xml_escape(s.labels[i]) << "</text>\n";
      }
    }
    os << "<text x=\"" << num(ox + kLeft + 8) << "\" y=\"" << num(kTop + 14 + 13 * si) << "\" font-size=\"11\" fill=\""
       << color << "\">" << xml_escape(s.name) << "</text>\n";
  }
  os << "</g>\n";
}

}  // namespace

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string render_svg(const std::vector<PlotPanel>& panels) {
  const double width = kPanelW * static_cast<double>(std::max<std::size_t>(1, panels.size()));
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(kPanelH)
     << "\" viewBox=\"0 0 " << num(width) << ' ' << num(kPanelH) << "\" font-family=\"sans-serif\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < panels.size(); ++i) panel(os, panels[i], kPanelW * static_cast<double>(i));
  os << "</svg>\n";
  return os.str();
}

}  // namespace lrnerv
