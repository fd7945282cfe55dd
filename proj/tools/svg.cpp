#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spo2/common.hpp"

namespace spo2::tools {

namespace {

std::string fmt_tick(double v) {
    std::ostringstream ss;
    const double a = std::abs(v);
    if (a != 0 && (a < 1e-3 || a >= 1e5))
        ss.precision(2), ss << std::scientific << v;
    else
        ss.precision(4), ss << v;
    return ss.str();
}

}  // namespace

void write_svg_plot(const std::string& path, const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::vector<SvgSeries>& series) {
    const int width = 720, height = 440;
    const int ml = 70, mr = 20, mt = 40, mb = 50;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
    for (const auto& s : series)
        for (size_t i = 0; i < s.x.size(); ++i) {
            x_min = std::min(x_min, s.x[i]);
            x_max = std::max(x_max, s.x[i]);
            y_min = std::min(y_min, s.y[i]);
            y_max = std::max(y_max, s.y[i]);
        }
    if (x_min > x_max) {
        x_min = 0;
        x_max = 1;
        y_min = 0;
        y_max = 1;
    }
    if (x_max - x_min < 1e-12) {
        x_min -= 0.5;
        x_max += 0.5;
    }
    if (y_max - y_min < 1e-12) {
        y_min -= 0.5;
        y_max += 0.5;
    }
    const double y_pad = 0.05 * (y_max - y_min);
    y_min -= y_pad;
    y_max += y_pad;

    auto px = [&](double x) { return ml + pw * (x - x_min) / (x_max - x_min); };
    auto py = [&](double y) { return mt + ph * (1.0 - (y - y_min) / (y_max - y_min)); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title
        << "</text>\n";

    // axes
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\"" << mt + ph
        << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
        << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double xv = x_min + k * (x_max - x_min) / 5;
        const double yv = y_min + k * (y_max - y_min) / 5;
        svg << "<line x1=\"" << px(xv) << "\" y1=\"" << mt + ph << "\" x2=\"" << px(xv) << "\" y2=\""
            << mt + ph + 5 << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << px(xv) << "\" y=\"" << mt + ph + 20
            << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt_tick(xv) << "</text>\n";
        svg << "<line x1=\"" << ml - 5 << "\" y1=\"" << py(yv) << "\" x2=\"" << ml << "\" y2=\"" << py(yv)
            << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << ml - 8 << "\" y=\"" << py(yv) + 4
            << "\" text-anchor=\"end\" font-size=\"11\">" << fmt_tick(yv) << "</text>\n";
    }
    svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
        << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n";
    svg << "<text x=\"16\" y=\"" << mt + ph / 2 << "\" text-anchor=\"middle\" font-size=\"13\" "
        << "transform=\"rotate(-90 16 " << mt + ph / 2 << ")\">" << y_label << "</text>\n";

    int legend_y = mt + 8;
    for (const auto& s : series) {
        if (s.scatter) {
            for (size_t i = 0; i < s.x.size(); ++i)
                svg << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i])
                    << "\" r=\"2.5\" fill=\"" << s.color << "\" fill-opacity=\"0.7\"/>\n";
        } else if (!s.x.empty()) {
            svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
            for (size_t i = 0; i < s.x.size(); ++i) svg << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
            svg << "\"/>\n";
        }
        if (!s.label.empty()) {
            svg << "<rect x=\"" << ml + pw - 150 << "\" y=\"" << legend_y - 8 << "\" width=\"12\" height=\"4\" fill=\""
                << s.color << "\"/>\n";
            svg << "<text x=\"" << ml + pw - 132 << "\" y=\"" << legend_y - 2 << "\" font-size=\"11\">" << s.label
                << "</text>\n";
            legend_y += 16;
        }
    }
    svg << "</svg>\n";
    write_text_file(path, svg.str());
}

}  // namespace spo2::tools
