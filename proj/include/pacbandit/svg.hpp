#pragma once

#include <string>
#include <vector>

namespace pacbandit {

struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    bool dashed = false;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    std::vector<std::string> x_ticks;  // category names; empty for numeric axes
};

// Standalone SVG line plot with markers and a legend.
std::string line_plot_svg(const PlotSpec& spec, const std::vector<PlotSeries>& series);

}  // namespace pacbandit
