#pragma once

#include <string>
#include <vector>

#include "tucker/csv.hpp"

namespace tucker {

/// Which columns a figure kind draws.
struct PlotSpec {
  std::string title;
  std::string x;
  std::vector<std::string> y;       // one series per column (and per series key)
  std::vector<std::string> series;  // key columns; those with one distinct value are ignored
};

/// fig2a, fig2b, fig2b-rescaled, fig3, fig3-subspace, fig4.
std::vector<std::string> plot_kinds();
PlotSpec plot_spec(const std::string& kind);

/// Pure function of its input: the same CSV always gives the same bytes.
/// Throws IoError when there are no data rows or a column is missing.
std::string render_svg(const CsvData& data, const PlotSpec& spec);

/// Renders first, so nothing is written when the input is unusable.
void emit_plot(const std::string& csv_path, const std::string& kind, const std::string& svg_path);

}  // namespace tucker
