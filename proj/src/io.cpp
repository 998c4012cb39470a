#include "mismpc/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mismpc/errors.hpp"

namespace mismpc {

std::string format_cell(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  if (header.empty()) throw invalid_input("write_csv: empty header");
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw invalid_input("write_csv: row width does not match header");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw invalid_input("write_csv: cannot open " + path);
  for (size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << header[i];
  }
  out << '\n';
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << format_cell(row[i]);
    }
    out << '\n';
  }
  if (!out) throw invalid_input("write_csv: write failed for " + path);
}

namespace {

struct Segment {
  double x0, y0, x1, y1;
};

struct Crossing {
  double x, y;
};

// Linear interpolation of the level crossing between two corner values.
Crossing edge_point(double xa, double ya, double va, double xb, double yb, double vb,
                    double level) {
  double t = (vb == va) ? 0.5 : (level - va) / (vb - va);
  if (t < 0.0) t = 0.0;
  if (t > 1.0) t = 1.0;
  return {xa + t * (xb - xa), ya + t * (yb - ya)};
}

bool same_point(double ax, double ay, double bx, double by) {
  return std::abs(ax - bx) <= 1e-12 && std::abs(ay - by) <= 1e-12;
}

}  // namespace

std::vector<Polyline> marching_squares(const std::vector<double>& xs,
                                       const std::vector<double>& ys,
                                       const std::vector<double>& field,
                                       double level) {
  const size_t nx = xs.size(), ny = ys.size();
  if (nx < 2 || ny < 2) throw invalid_input("marching_squares: need a 2x2 grid");
  if (field.size() != nx * ny)
    throw invalid_input("marching_squares: field size does not match grid");

  std::vector<Segment> segs;
  for (size_t i = 0; i + 1 < nx; ++i) {
    for (size_t j = 0; j + 1 < ny; ++j) {
      // Corners counterclockwise from (xs[i], ys[j]).
      const double a = field[i * ny + j];
      const double b = field[(i + 1) * ny + j];
      const double c = field[(i + 1) * ny + j + 1];
      const double d = field[i * ny + j + 1];
      if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c) || !std::isfinite(d))
        continue;
      const int idx = (a > level ? 1 : 0) | (b > level ? 2 : 0) | (c > level ? 4 : 0) |
                      (d > level ? 8 : 0);
      if (idx == 0 || idx == 15) continue;

      const Crossing ab = edge_point(xs[i], ys[j], a, xs[i + 1], ys[j], b, level);
      const Crossing bc = edge_point(xs[i + 1], ys[j], b, xs[i + 1], ys[j + 1], c, level);
      const Crossing cd = edge_point(xs[i + 1], ys[j + 1], c, xs[i], ys[j + 1], d, level);
      const Crossing da = edge_point(xs[i], ys[j + 1], d, xs[i], ys[j], a, level);

      auto emit = [&segs](const Crossing& p, const Crossing& q) {
        segs.push_back({p.x, p.y, q.x, q.y});
      };
      switch (idx) {
        case 1: case 14: emit(da, ab); break;
        case 2: case 13: emit(ab, bc); break;
        case 3: case 12: emit(da, bc); break;
        case 4: case 11: emit(bc, cd); break;
        case 6: case 9:  emit(ab, cd); break;
        case 7: case 8:  emit(da, cd); break;
        case 5: case 10: {
          // Saddle: resolve the pairing with the cell-center average.
          const bool center_above = 0.25 * (a + b + c + d) > level;
          if ((idx == 5) == center_above) {
            emit(da, cd);
            emit(ab, bc);
          } else {
            emit(da, ab);
            emit(bc, cd);
          }
          break;
        }
        default: break;
      }
    }
  }

  // Chain segments that share endpoints; adjacent cells interpolate shared
  // edges identically, so matches are exact up to rounding.
  std::vector<bool> used(segs.size(), false);
  std::vector<Polyline> out;
  for (size_t s = 0; s < segs.size(); ++s) {
    if (used[s]) continue;
    used[s] = true;
    std::vector<double> px{segs[s].x0, segs[s].x1};
    std::vector<double> py{segs[s].y0, segs[s].y1};
    bool grew = true;
    while (grew) {
      grew = false;
      for (size_t t = 0; t < segs.size(); ++t) {
        if (used[t]) continue;
        const Segment& g = segs[t];
        if (same_point(px.back(), py.back(), g.x0, g.y0)) {
          px.push_back(g.x1);
          py.push_back(g.y1);
        } else if (same_point(px.back(), py.back(), g.x1, g.y1)) {
          px.push_back(g.x0);
          py.push_back(g.y0);
        } else if (same_point(px.front(), py.front(), g.x1, g.y1)) {
          px.insert(px.begin(), g.x0);
          py.insert(py.begin(), g.y0);
        } else if (same_point(px.front(), py.front(), g.x0, g.y0)) {
          px.insert(px.begin(), g.x1);
          py.insert(py.begin(), g.y1);
        } else {
          continue;
        }
        used[t] = true;
        grew = true;
      }
    }
    Polyline line;
    line.xs = std::move(px);
    line.ys = std::move(py);
    out.push_back(std::move(line));
  }
  return out;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string r;
  for (char ch : s) {
    if (ch == '&') r += "&amp;";
    else if (ch == '<') r += "&lt;";
    else if (ch == '>') r += "&gt;";
    else r += ch;
  }
  return r;
}

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string fmt_tick(double v) {
  if (std::abs(v) < 1e-12) v = 0.0;  // avoid "-0" tick labels
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Largest {1,2,5}*10^k step not exceeding the raw spacing.
double nice_step(double range, int target_ticks) {
  const double raw = range / target_ticks;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {5.0, 2.0, 1.0}) {
    if (m * mag <= raw * (1.0 + 1e-12)) return m * mag;
  }
  return mag;
}

}  // namespace

void write_svg(const std::string& path, const SvgChart& chart) {
  double x_min = chart.x_min, x_max = chart.x_max;
  double y_min = chart.y_min, y_max = chart.y_max;
  if (!chart.has_range) {
    bool any = false;
    for (const auto& s : chart.series) {
      for (size_t i = 0; i < s.line.xs.size(); ++i) {
        const double x = s.line.xs[i], y = s.line.ys[i];
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        if (!any) {
          x_min = x_max = x;
          y_min = y_max = y;
          any = true;
        } else {
          x_min = std::min(x_min, x);
          x_max = std::max(x_max, x);
          y_min = std::min(y_min, y);
          y_max = std::max(y_max, y);
        }
      }
    }
    if (!any) {
      x_min = y_min = 0.0;
      x_max = y_max = 1.0;
    }
    if (x_max - x_min < 1e-12) {
      x_min -= 0.5;
      x_max += 0.5;
    }
    if (y_max - y_min < 1e-12) {
      y_min -= 0.5;
      y_max += 0.5;
    }
    const double xp = 0.05 * (x_max - x_min), yp = 0.05 * (y_max - y_min);
    x_min -= xp;
    x_max += xp;
    y_min -= yp;
    y_max += yp;
  }

  const double ml = 64, mr = 16, mt = chart.title.empty() ? 14 : 30, mb = 46;
  const double pw = chart.width - ml - mr;
  const double ph = chart.height - mt - mb;
  auto sx = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * pw; };
  auto sy = [&](double y) { return mt + ph - (y - y_min) / (y_max - y_min) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << chart.width
      << "\" height=\"" << chart.height << "\" viewBox=\"0 0 " << chart.width << " "
      << chart.height << "\">\n";
  svg << "<rect width=\"" << chart.width << "\" height=\"" << chart.height
      << "\" fill=\"white\"/>\n";
  svg << "<rect x=\"" << fmt2(ml) << "\" y=\"" << fmt2(mt) << "\" width=\"" << fmt2(pw)
      << "\" height=\"" << fmt2(ph)
      << "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n";

  if (!chart.title.empty()) {
    svg << "<text x=\"" << fmt2(ml + pw / 2) << "\" y=\"18\" font-family=\"sans-serif\""
        << " font-size=\"13\" text-anchor=\"middle\">" << xml_escape(chart.title)
        << "</text>\n";
  }

  // Ticks and grid lines.
  const double xstep = nice_step(x_max - x_min, 6);
  for (double t = std::ceil(x_min / xstep) * xstep; t <= x_max + 1e-12 * xstep;
       t += xstep) {
    const double px = sx(t);
    svg << "<line x1=\"" << fmt2(px) << "\" y1=\"" << fmt2(mt) << "\" x2=\"" << fmt2(px)
        << "\" y2=\"" << fmt2(mt + ph)
        << "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
    svg << "<line x1=\"" << fmt2(px) << "\" y1=\"" << fmt2(mt + ph) << "\" x2=\""
        << fmt2(px) << "\" y2=\"" << fmt2(mt + ph + 4)
        << "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << fmt2(px) << "\" y=\"" << fmt2(mt + ph + 16)
        << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">"
        << fmt_tick(t) << "</text>\n";
  }
  const double ystep = nice_step(y_max - y_min, 6);
  for (double t = std::ceil(y_min / ystep) * ystep; t <= y_max + 1e-12 * ystep;
       t += ystep) {
    const double py = sy(t);
    svg << "<line x1=\"" << fmt2(ml) << "\" y1=\"" << fmt2(py) << "\" x2=\""
        << fmt2(ml + pw) << "\" y2=\"" << fmt2(py)
        << "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
    svg << "<line x1=\"" << fmt2(ml - 4) << "\" y1=\"" << fmt2(py) << "\" x2=\""
        << fmt2(ml) << "\" y2=\"" << fmt2(py)
        << "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << fmt2(ml - 7) << "\" y=\"" << fmt2(py + 3)
        << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">"
        << fmt_tick(t) << "</text>\n";
  }

  if (!chart.x_label.empty()) {
    svg << "<text x=\"" << fmt2(ml + pw / 2) << "\" y=\"" << fmt2(chart.height - 10)
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">"
        << xml_escape(chart.x_label) << "</text>\n";
  }
  if (!chart.y_label.empty()) {
    svg << "<text x=\"16\" y=\"" << fmt2(mt + ph / 2)
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\""
        << " transform=\"rotate(-90 16 " << fmt2(mt + ph / 2) << ")\">"
        << xml_escape(chart.y_label) << "</text>\n";
  }

  // Series: non-finite points break a polyline into pieces.
  for (const auto& s : chart.series) {
    std::vector<std::string> pieces;
    std::string cur;
    size_t cur_pts = 0;
    for (size_t i = 0; i < s.line.xs.size(); ++i) {
      const double x = s.line.xs[i], y = s.line.ys[i];
      if (!std::isfinite(x) || !std::isfinite(y)) {
        if (cur_pts >= 2) pieces.push_back(cur);
        cur.clear();
        cur_pts = 0;
        continue;
      }
      if (!cur.empty()) cur += ' ';
      cur += fmt2(sx(x)) + "," + fmt2(sy(y));
      ++cur_pts;
    }
    if (cur_pts >= 2) pieces.push_back(cur);
    for (const auto& p : pieces) {
      svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\""
          << s.width << "\"";
      if (!s.dash.empty()) svg << " stroke-dasharray=\"" << s.dash << "\"";
      svg << " points=\"" << p << "\"/>\n";
    }
  }

  // Legend for labeled series, upper right of the plot area.
  double ly = mt + 14;
  for (const auto& s : chart.series) {
    if (s.label.empty()) continue;
    const double lx = ml + pw - 150;
    svg << "<line x1=\"" << fmt2(lx) << "\" y1=\"" << fmt2(ly - 4) << "\" x2=\""
        << fmt2(lx + 22) << "\" y2=\"" << fmt2(ly - 4) << "\" stroke=\"" << s.color
        << "\" stroke-width=\"" << s.width << "\"";
    if (!s.dash.empty()) svg << " stroke-dasharray=\"" << s.dash << "\"";
    svg << "/>\n";
    svg << "<text x=\"" << fmt2(lx + 28) << "\" y=\"" << fmt2(ly)
        << "\" font-family=\"sans-serif\" font-size=\"10\">" << xml_escape(s.label)
        << "</text>\n";
    ly += 14;
  }

  svg << "</svg>\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw invalid_input("write_svg: cannot open " + path);
  out << svg.str();
  if (!out) throw invalid_input("write_svg: write failed for " + path);
}

}  // namespace mismpc
