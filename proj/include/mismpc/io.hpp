#pragma once

// Deterministic artifact writers: CSV with fixed formatting, a minimal
// self-contained SVG line/contour plotter, and marching-squares contour
// extraction for scalar fields on rectilinear grids.

#include <string>
#include <vector>

#include "mismpc/linalg.hpp"

namespace mismpc {

// %.17g formatting; non-finite values print as inf/-inf/nan. Rows must all
// match the header width.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

std::string format_cell(double v);

struct Polyline {
  std::vector<double> xs;
  std::vector<double> ys;
};

// Iso-contour segments of field(i,j) on grid (xs[i], ys[j]) at the given
// level, chained into polylines. Non-finite corners drop their cells; saddle
// cells split on the center average.
std::vector<Polyline> marching_squares(const std::vector<double>& xs,
                                       const std::vector<double>& ys,
                                       const std::vector<double>& field,
                                       double level);

struct SvgSeries {
  Polyline line;
  std::string color = "#1f6fb2";
  double width = 1.5;
  std::string dash;   // e.g. "4,3"; empty = solid
  std::string label;  // legend entry when nonempty
};

// Single-panel chart with axes, ticks, and an optional legend. Data ranges
// are computed from the series unless overridden.
struct SvgChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<SvgSeries> series;
  int width = 640;
  int height = 440;
  bool has_range = false;
  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
};

void write_svg(const std::string& path, const SvgChart& chart);

}  // namespace mismpc
