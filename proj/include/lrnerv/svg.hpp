#pragma once

#include <string>
#include <utility>
#include <vector>

namespace lrnerv {

struct PlotSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
  std::vector<std::string> labels;  // optional, one per point
  bool lines = true;                // false: markers only
};

struct PlotPanel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
};

std::string xml_escape(const std::string& s);

// Panels are laid out left to right in one SVG document. Non-finite points
// are skipped.
std::string render_svg(const std::vector<PlotPanel>& panels);

}  // namespace lrnerv
