#pragma once

#include <string>
#include <vector>

namespace dynlight::svg {

struct BarGroup {
  std::string label;                 // e.g. dataset name
  std::vector<double> values;        // one per series, NaN = missing
};

/// Grouped bar chart, one color per series (e.g. methods across datasets).
void write_grouped_bars(const std::string& path, const std::string& title,
                        const std::vector<std::string>& series,
                        const std::vector<BarGroup>& groups,
                        const std::string& y_label);

/// Matrix heatmap with per-cell value labels (e.g. transfer scores).
void write_heatmap(const std::string& path, const std::string& title,
                   const std::vector<std::string>& row_labels,
                   const std::vector<std::string>& col_labels,
                   const std::vector<std::vector<double>>& cells);

}  // namespace dynlight::svg
