#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "dynlight/common.hpp"

namespace dynlight::svg {

namespace {

const char* kPalette[] = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759",
                          "#76b7b2", "#edc948", "#b07aa1", "#9c755f"};

std::string fmt(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

void write_grouped_bars(const std::string& path, const std::string& title,
                        const std::vector<std::string>& series,
                        const std::vector<BarGroup>& groups,
                        const std::string& y_label) {
  const int width = 840, height = 480;
  const int left = 70, right = 180, top = 50, bottom = 60;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  double vmax = 0;
  for (const auto& g : groups)
    for (double v : g.values)
      if (std::isfinite(v)) vmax = std::max(vmax, v);
  if (vmax <= 0) vmax = 1;
  vmax *= 1.1;

  std::ofstream out(path);
  if (!out) throw FormatError("cannot write svg '" + path + "'");
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
      << "' height='" << height << "' font-family='sans-serif'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << width / 2 << "' y='28' text-anchor='middle' "
      << "font-size='17'>" << title << "</text>\n";
  out << "<text x='18' y='" << top + plot_h / 2
      << "' font-size='12' text-anchor='middle' transform='rotate(-90 18 "
      << top + plot_h / 2 << ")'>" << y_label << "</text>\n";

  // y grid
  for (int tick = 0; tick <= 5; ++tick) {
    double v = vmax * tick / 5;
    double y = top + plot_h * (1 - tick / 5.0);
    out << "<line x1='" << left << "' y1='" << y << "' x2='" << left + plot_w
        << "' y2='" << y << "' stroke='#dddddd'/>\n";
    out << "<text x='" << left - 6 << "' y='" << y + 4
        << "' font-size='11' text-anchor='end'>" << fmt(v, 0) << "</text>\n";
  }

  const double group_w = plot_w / std::max<size_t>(1, groups.size());
  const double bar_w =
      group_w * 0.8 / std::max<size_t>(1, series.size());
  for (size_t g = 0; g < groups.size(); ++g) {
    double gx = left + g * group_w + group_w * 0.1;
    for (size_t s = 0; s < series.size(); ++s) {
      double v = s < groups[g].values.size() ? groups[g].values[s]
                                             : std::nan("");
      if (!std::isfinite(v)) continue;
      double h = plot_h * v / vmax;
      out << "<rect x='" << gx + s * bar_w << "' y='" << top + plot_h - h
          << "' width='" << bar_w * 0.9 << "' height='" << h << "' fill='"
          << kPalette[s % 8] << "'/>\n";
      out << "<text x='" << gx + s * bar_w + bar_w * 0.45 << "' y='"
          << top + plot_h - h - 4
          << "' font-size='9' text-anchor='middle'>" << fmt(v) << "</text>\n";
    }
    out << "<text x='" << gx + group_w * 0.4 << "' y='"
        << top + plot_h + 18 << "' font-size='12' text-anchor='middle'>"
        << groups[g].label << "</text>\n";
  }

  for (size_t s = 0; s < series.size(); ++s) {
    double y = top + 10 + s * 18;
    out << "<rect x='" << width - right + 14 << "' y='" << y - 10
        << "' width='12' height='12' fill='" << kPalette[s % 8] << "'/>\n";
    out << "<text x='" << width - right + 32 << "' y='" << y
        << "' font-size='12'>" << series[s] << "</text>\n";
  }
  out << "</svg>\n";
}

void write_heatmap(const std::string& path, const std::string& title,
                   const std::vector<std::string>& row_labels,
                   const std::vector<std::string>& col_labels,
                   const std::vector<std::vector<double>>& cells) {
  const int cell = 84, left = 130, top = 80;
  const int width = left + cell * static_cast<int>(col_labels.size()) + 40;
  const int height = top + cell * static_cast<int>(row_labels.size()) + 40;

  double lo = 0, hi = 0;
  for (const auto& row : cells)
    for (double v : row) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (hi <= lo) hi = lo + 1;

  std::ofstream out(path);
  if (!out) throw FormatError("cannot write svg '" + path + "'");
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
      << "' height='" << height << "' font-family='sans-serif'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << width / 2 << "' y='30' text-anchor='middle' "
      << "font-size='16'>" << title << "</text>\n";

  for (size_t c = 0; c < col_labels.size(); ++c)
    out << "<text x='" << left + cell * c + cell / 2 << "' y='" << top - 10
        << "' font-size='12' text-anchor='middle'>" << col_labels[c]
        << "</text>\n";

  for (size_t r = 0; r < row_labels.size(); ++r) {
    out << "<text x='" << left - 10 << "' y='" << top + cell * r + cell / 2
        << "' font-size='12' text-anchor='end'>" << row_labels[r]
        << "</text>\n";
    for (size_t c = 0; c < cells[r].size(); ++c) {
      double t = (cells[r][c] - lo) / (hi - lo);  // 0 good, 1 bad
      int red = static_cast<int>(244 - 90 * (1 - t));
      int green = static_cast<int>(244 - 150 * t);
      int blue = static_cast<int>(244 - 120 * t);
      out << "<rect x='" << left + cell * c << "' y='" << top + cell * r
          << "' width='" << cell - 2 << "' height='" << cell - 2
          << "' fill='rgb(" << red << "," << green << "," << blue << ")'/>\n";
      out << "<text x='" << left + cell * c + cell / 2 - 1 << "' y='"
          << top + cell * r + cell / 2 + 4
          << "' font-size='12' text-anchor='middle'>" << fmt(cells[r][c], 3)
          << "</text>\n";
    }
  }
  out << "</svg>\n";
}

}  // namespace dynlight::svg
