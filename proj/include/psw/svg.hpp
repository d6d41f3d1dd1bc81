#pragma once

#include <string>

#include "psw/balance.hpp"

namespace psw {

// Standalone SVG renderings of the diagnostic series. Output is fully
// deterministic (fixed canvas, no timestamps).
std::string love_plot_svg(const LoveSeries& series);
std::string density_plot_svg(const DensitySeries& series);
std::string histogram_svg(const HistogramSeries& series);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace psw
