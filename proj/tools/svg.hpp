#ifndef SPO2_TOOLS_SVG_HPP
#define SPO2_TOOLS_SVG_HPP

#include <string>
#include <vector>

namespace spo2::tools {

struct SvgSeries {
    std::string label;
    std::string color = "#1f77b4";
    std::vector<double> x, y;
    bool scatter = false;
};

// Minimal line/scatter plot with axes and tick labels.
void write_svg_plot(const std::string& path, const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::vector<SvgSeries>& series);

}  // namespace spo2::tools

#endif
