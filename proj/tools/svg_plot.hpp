#pragma once

// Minimal static SVG line charts for the plot-data outputs. One polyline per
// series on a framed plot area with tick labels; no dependencies.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "nvicore/errors.hpp"

namespace nvi::plot {

struct Series {
    std::string name;
    std::vector<double> x, y;
    std::string color = "#1f77b4";
};

inline void write_line_chart(const std::string& path, const std::string& title,
                             const std::string& x_label, const std::string& y_label,
                             const std::vector<Series>& series) {
    constexpr double kW = 720, kH = 420;
    constexpr double kL = 70, kR = 20, kT = 40, kB = 50;

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series) {
        for (double v : s.x) {
            xmin = std::min(xmin, v);
            xmax = std::max(xmax, v);
        }
        for (double v : s.y) {
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    }
    if (!(xmin < xmax)) xmax = xmin + 1.0;
    if (!(ymin < ymax)) ymax = ymin + 1.0;
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    auto sx = [&](double v) { return kL + (v - xmin) / (xmax - xmin) * (kW - kL - kR); };
    auto sy = [&](double v) { return kH - kB - (v - ymin) / (ymax - ymin) * (kH - kT - kB); };

    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("write_line_chart: cannot open " + path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n";
    f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    f << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" "
      << "font-family=\"sans-serif\">" << title << "</text>\n";
    f << "<rect x=\"" << kL << "\" y=\"" << kT << "\" width=\"" << kW - kL - kR
      << "\" height=\"" << kH - kT - kB << "\" fill=\"none\" stroke=\"#444\"/>\n";

    for (int i = 0; i <= 4; ++i) {
        const double xv = xmin + (xmax - xmin) * i / 4.0;
        const double yv = ymin + (ymax - ymin) * i / 4.0;
        f << "<text x=\"" << sx(xv) << "\" y=\"" << kH - kB + 18
          << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
          << std::round(xv * 100.0) / 100.0 << "</text>\n";
        f << "<text x=\"" << kL - 8 << "\" y=\"" << sy(yv) + 4
          << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
          << std::round(yv * 100.0) / 100.0 << "</text>\n";
        if (i > 0 && i < 4) {
            f << "<line x1=\"" << kL << "\" y1=\"" << sy(yv) << "\" x2=\"" << kW - kR
              << "\" y2=\"" << sy(yv) << "\" stroke=\"#ddd\"/>\n";
        }
    }
    f << "<text x=\"" << (kL + kW - kR) / 2 << "\" y=\"" << kH - 12
      << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">" << x_label
      << "</text>\n";
    f << "<text x=\"16\" y=\"" << (kT + kH - kB) / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" "
      << "transform=\"rotate(-90 16 " << (kT + kH - kB) / 2 << ")\">" << y_label
      << "</text>\n";

    const std::vector<std::string> palette{"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                           "#ff7f0e"};
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const std::string color = s.color.empty() ? palette[si % palette.size()] : s.color;
        f << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            f << sx(s.x[i]) << "," << sy(s.y[i]) << " ";
        }
        f << "\"/>\n";
        f << "<text x=\"" << kW - kR - 8 << "\" y=\"" << kT + 18 + 16 * static_cast<double>(si)
          << "\" text-anchor=\"end\" font-size=\"12\" font-family=\"sans-serif\" fill=\""
          << color << "\">" << s.name << "</text>\n";
    }
    f << "</svg>\n";
}

} // namespace nvi::plot
