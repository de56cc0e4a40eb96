#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rig {

// Static SVG line chart; CSV is the canonical output, this is a convenience view.
struct SvgSeries {
    std::string label;
    std::vector<double> y;
};

inline std::string render_svg_chart(const std::string& title, const std::vector<double>& x,
                                    const std::vector<SvgSeries>& series) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#17becf"};
    const int width = 720, height = 480;
    const double ml = 70, mr = 20, mt = 40, mb = 50;
    double ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (double v : s.y) {
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    if (!(ymin <= ymax)) throw std::invalid_argument("render_svg_chart: empty series");
    if (ymax - ymin < 1e-12) {
        ymax += 1.0;
        ymin -= 1.0;
    }
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
    const double xmin = x.front(), xmax = x.back();

    auto px = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * (width - ml - mr); };
    auto py = [&](double v) { return height - mb - (v - ymin) / (ymax - ymin) * (height - mt - mb); };
    char buf[160];
    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"480\" "
           "viewBox=\"0 0 720 480\">\n";
    out += "<rect width=\"720\" height=\"480\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf,
                  "<text x=\"360\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" "
                  "font-family=\"sans-serif\">%s</text>\n",
                  title.c_str());
    out += buf;
    // axes and ticks
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                  ml, height - mb, static_cast<double>(width - mr), height - mb);
    out += buf;
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                  ml, mt, ml, height - mb);
    out += buf;
    for (int k = 0; k <= 5; ++k) {
        const double tx = xmin + (xmax - xmin) * k / 5.0;
        const double ty = ymin + (ymax - ymin) * k / 5.0;
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" font-size=\"11\" "
                      "font-family=\"sans-serif\">%.4g</text>\n",
                      px(tx), height - mb + 18.0, tx);
        out += buf;
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\" font-size=\"11\" "
                      "font-family=\"sans-serif\">%.4g</text>\n",
                      ml - 6.0, py(ty) + 4.0, ty);
        out += buf;
    }
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = palette[s % 6];
        std::string pts;
        for (std::size_t j = 0; j < x.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(x[j]), py(series[s].y[j]));
            pts += buf;
        }
        out += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" font-family=\"sans-serif\" "
                      "fill=\"%s\">%s</text>\n",
                      width - mr - 160.0, mt + 16.0 * (s + 1), color, series[s].label.c_str());
        out += buf;
    }
    out += "</svg>\n";
    return out;
}

inline void write_svg_chart(const std::string& path, const std::string& title,
                            const std::vector<double>& x, const std::vector<SvgSeries>& series) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << render_svg_chart(title, x, series);
}

}  // namespace rig
