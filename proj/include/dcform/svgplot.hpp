#pragma once

// Minimal static SVG line plots: log/linear axes, overlaid series with a
// color cycle, optional unity reference line and shaded band above a given
// frequency. Output is a self-contained .svg file.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace dcform {

struct PlotSeries {
    std::string label;
    std::vector<double> x, y;
};

struct PlotPanel {
    std::string ylabel;
    std::vector<PlotSeries> series;
    bool unity_line = false;     // dashed reference at y = unity_value
    double unity_value = 0.0;
};

struct PlotFigure {
    std::string title;
    std::string xlabel;
    bool logx = false;
    double shade_above_x = 0.0;  // grey band for x > this (0 disables)
    std::vector<PlotPanel> panels;
};

namespace svg_detail {

inline const char* color(std::size_t i) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    return palette[i % 8];
}

inline std::string fmt(double v) {
    std::ostringstream o;
    o.precision(6);
    o << v;
    return o.str();
}

}  // namespace svg_detail

inline std::string render_svg(const PlotFigure& fig) {
    using svg_detail::color;
    using svg_detail::fmt;
    const double W = 860.0, panel_h = 300.0, ml = 80.0, mr = 30.0, mt = 46.0, mb = 52.0;
    const double H = mt + fig.panels.size() * panel_h + mb;
    std::ostringstream s;
    s << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
      << "' font-family='sans-serif' font-size='12'>\n";
    s << "<rect width='100%' height='100%' fill='white'/>\n";
    s << "<text x='" << W / 2 << "' y='24' text-anchor='middle' font-size='15'>" << fig.title
      << "</text>\n";

    // shared x range over all panels
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
    for (const auto& p : fig.panels)
        for (const auto& ser : p.series)
            for (double v : ser.x) {
                if (fig.logx && !(v > 0.0)) continue;
                x0 = std::min(x0, v);
                x1 = std::max(x1, v);
            }
    if (!(x1 > x0)) {
        x0 = 0.0;
        x1 = 1.0;
    }
    auto xmap = [&](double v) {
        const double a = fig.logx ? std::log10(x0) : x0;
        const double b = fig.logx ? std::log10(x1) : x1;
        const double t = ((fig.logx ? std::log10(v) : v) - a) / (b - a);
        return ml + t * (W - ml - mr);
    };

    for (std::size_t pi = 0; pi < fig.panels.size(); ++pi) {
        const PlotPanel& p = fig.panels[pi];
        const double top = mt + pi * panel_h + 10.0, bot = mt + (pi + 1) * panel_h - 34.0;
        double y0 = std::numeric_limits<double>::infinity(), y1 = -y0;
        for (const auto& ser : p.series)
            for (double v : ser.y)
                if (std::isfinite(v)) {
                    y0 = std::min(y0, v);
                    y1 = std::max(y1, v);
                }
        if (p.unity_line) {
            y0 = std::min(y0, p.unity_value);
            y1 = std::max(y1, p.unity_value);
        }
        if (!(y1 > y0)) {
            y0 -= 1.0;
            y1 += 1.0;
        }
        const double pad = 0.06 * (y1 - y0);
        y0 -= pad;
        y1 += pad;
        auto ymap = [&](double v) { return bot - (v - y0) / (y1 - y0) * (bot - top); };

        if (fig.shade_above_x > 0.0 && fig.shade_above_x < x1) {
            const double xs = xmap(std::max(fig.shade_above_x, x0));
            s << "<rect x='" << fmt(xs) << "' y='" << fmt(top) << "' width='" << fmt(W - mr - xs)
              << "' height='" << fmt(bot - top) << "' fill='#dddddd' fill-opacity='0.55'/>\n";
        }
        s << "<rect x='" << ml << "' y='" << fmt(top) << "' width='" << W - ml - mr << "' height='"
          << fmt(bot - top) << "' fill='none' stroke='#333'/>\n";

        // x ticks: decades when log, 6 even ticks otherwise
        if (fig.logx) {
            const int d0 = static_cast<int>(std::ceil(std::log10(x0) - 1e-9));
            const int d1 = static_cast<int>(std::floor(std::log10(x1) + 1e-9));
            for (int d = d0; d <= d1; ++d) {
                const double xv = std::pow(10.0, d);
                const double xp = xmap(xv);
                s << "<line x1='" << fmt(xp) << "' y1='" << fmt(top) << "' x2='" << fmt(xp) << "' y2='"
                  << fmt(bot) << "' stroke='#eee'/>\n";
                if (pi + 1 == fig.panels.size())
                    s << "<text x='" << fmt(xp) << "' y='" << fmt(bot + 16) << "' text-anchor='middle'>1e" << d
                      << "</text>\n";
            }
        } else {
            for (int i = 0; i <= 5; ++i) {
                const double xv = x0 + (x1 - x0) * i / 5.0;
                const double xp = xmap(xv);
                s << "<line x1='" << fmt(xp) << "' y1='" << fmt(top) << "' x2='" << fmt(xp) << "' y2='"
                  << fmt(bot) << "' stroke='#eee'/>\n";
                if (pi + 1 == fig.panels.size())
                    s << "<text x='" << fmt(xp) << "' y='" << fmt(bot + 16) << "' text-anchor='middle'>"
                      << fmt(xv) << "</text>\n";
            }
        }
        for (int i = 0; i <= 4; ++i) {
            const double yv = y0 + (y1 - y0) * i / 4.0;
            const double yp = ymap(yv);
            s << "<line x1='" << ml << "' y1='" << fmt(yp) << "' x2='" << W - mr << "' y2='" << fmt(yp)
              << "' stroke='#eee'/>\n";
            s << "<text x='" << ml - 6 << "' y='" << fmt(yp + 4) << "' text-anchor='end'>" << fmt(yv)
              << "</text>\n";
        }
        if (p.unity_line) {
            const double yp = ymap(p.unity_value);
            s << "<line x1='" << ml << "' y1='" << fmt(yp) << "' x2='" << W - mr << "' y2='" << fmt(yp)
              << "' stroke='#444' stroke-dasharray='6,4'/>\n";
        }
        s << "<text x='16' y='" << fmt((top + bot) / 2) << "' transform='rotate(-90 16 " << fmt((top + bot) / 2)
          << ")' text-anchor='middle'>" << p.ylabel << "</text>\n";

        for (std::size_t si = 0; si < p.series.size(); ++si) {
            const auto& ser = p.series[si];
            s << "<polyline fill='none' stroke='" << color(si) << "' stroke-width='1.6' points='";
            for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i) {
                if (fig.logx && !(ser.x[i] > 0.0)) continue;
                if (!std::isfinite(ser.y[i])) continue;
                s << fmt(xmap(ser.x[i])) << ',' << fmt(ymap(ser.y[i])) << ' ';
            }
            s << "'/>\n";
            if (pi == 0) {
                const double lx = ml + 12.0, ly = top + 16.0 + 16.0 * si;
                s << "<line x1='" << lx << "' y1='" << ly - 4 << "' x2='" << lx + 22 << "' y2='" << ly - 4
                  << "' stroke='" << color(si) << "' stroke-width='2'/>\n";
                s << "<text x='" << lx + 28 << "' y='" << ly << "'>" << ser.label << "</text>\n";
            }
        }
    }
    s << "<text x='" << W / 2 << "' y='" << H - 14 << "' text-anchor='middle'>" << fig.xlabel << "</text>\n";
    s << "</svg>\n";
    return s.str();
}

}  // namespace dcform
