#pragma once

#include "medipool/analysis.hpp"
#include "medipool/math.hpp"
#include "medipool/methods.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

// Standalone SVG forest plot: one row per study (label, point marker with
// area proportional to pooling weight, CI segment, estimate text) and a
// diamond spanning the pooled CI. Byte output is deterministic.

namespace medipool::forest {

struct ForestOptions {
    std::string xlab = "Effect";
    std::string title;
};

namespace detail {

inline std::string f2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

inline double nice_step(double raw) {
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (raw <= m * mag * (1.0 + 1e-12)) return m * mag;
    return 10.0 * mag;
}

inline std::string tick_label(double v, double step) {
    const int decimals = std::max(0, -int(std::floor(std::log10(step) + 1e-9)));
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

} // namespace detail

inline std::string forest_svg(const AnalysisRun& run, const ForestOptions& opt = {}) {
    if (!run.pooled) throw InvalidConfig("forest plot requires a pooled analysis");
    const auto& p = *run.pooled;
    for (const auto& e : run.effects)
        if (!e.se)
            throw InvalidConfig("forest plot requires per-study standard errors; the mm/wm "
                                "pooling methods do not provide them");

    const int k = int(run.effects.size());
    const double zq = math::norm_quantile(0.5 * (1.0 + p.level));

    double lo = p.ci_lb, hi = p.ci_ub;
    for (const auto& e : run.effects) {
        lo = std::min(lo, e.y - zq * *e.se);
        hi = std::max(hi, e.y + zq * *e.se);
    }
    const double pad = 0.05 * (hi - lo > 0.0 ? hi - lo : 1.0);
    lo -= pad;
    hi += pad;

    const double width = 900.0;
    const double height = 60.0 + 22.0 * k + 120.0;
    const double plot_x0 = 250.0, plot_x1 = 640.0;
    const double rows_y0 = 60.0;
    const auto X = [&](double v) { return plot_x0 + (v - lo) * (plot_x1 - plot_x0) / (hi - lo); };

    double wmax = 0.0;
    for (const auto& e : run.effects) wmax = std::max(wmax, e.weight.value_or(1.0));
    if (!(wmax > 0.0)) wmax = 1.0;

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::f2(width) +
           "\" height=\"" + detail::f2(height) + "\" viewBox=\"0 0 " + detail::f2(width) + " " +
           detail::f2(height) + "\">\n";
    svg += "<style>text{font-family:monospace;font-size:12px;}.axis line,.tick "
           "line{stroke:#000;}.study-ci{stroke:#000;stroke-width:1;}.study-point{fill:#000;}"
           ".diamond{fill:#000;}</style>\n";
    if (!opt.title.empty())
        svg += "<text class=\"title\" x=\"" + detail::f2(width / 2) +
               "\" y=\"24\" text-anchor=\"middle\">" + detail::xml_escape(opt.title) + "</text>\n";
    svg += "<text x=\"8\" y=\"" + detail::f2(rows_y0 - 8.0) + "\">Study</text>\n";
    svg += "<text x=\"" + detail::f2(width - 8.0) + "\" y=\"" + detail::f2(rows_y0 - 8.0) +
           "\" text-anchor=\"end\">Estimate [" + detail::f2(100.0 * p.level) + "% CI]</text>\n";

    for (int i = 0; i < k; ++i) {
        const auto& e = run.effects[i];
        const double cy = rows_y0 + 22.0 * i + 11.0;
        const double clb = e.y - zq * *e.se;
        const double cub = e.y + zq * *e.se;
        const double side = std::max(3.0, 13.0 * std::sqrt(e.weight.value_or(1.0) / wmax));
        svg += "<text class=\"study-label\" x=\"8\" y=\"" + detail::f2(cy + 4.0) + "\">" +
               detail::xml_escape(e.id) + "</text>\n";
        svg += "<line class=\"study-ci\" x1=\"" + detail::f2(X(clb)) + "\" y1=\"" +
               detail::f2(cy) + "\" x2=\"" + detail::f2(X(cub)) + "\" y2=\"" + detail::f2(cy) +
               "\"/>\n";
        svg += "<rect class=\"study-point\" x=\"" + detail::f2(X(e.y) - side / 2.0) + "\" y=\"" +
               detail::f2(cy - side / 2.0) + "\" width=\"" + detail::f2(side) + "\" height=\"" +
               detail::f2(side) + "\"/>\n";
        svg += "<text class=\"study-est\" x=\"" + detail::f2(width - 8.0) + "\" y=\"" +
               detail::f2(cy + 4.0) + "\" text-anchor=\"end\">" + detail::f2(e.y) + " [" +
               detail::f2(clb) + ", " + detail::f2(cub) + "]</text>\n";
    }

    const double dy = rows_y0 + 22.0 * k + 20.0;
    svg += "<polygon class=\"diamond\" points=\"" + detail::f2(X(p.ci_lb)) + "," +
           detail::f2(dy) + " " + detail::f2(X(p.estimate)) + "," + detail::f2(dy - 7.0) + " " +
           detail::f2(X(p.ci_ub)) + "," + detail::f2(dy) + " " + detail::f2(X(p.estimate)) + "," +
           detail::f2(dy + 7.0) + "\"/>\n";
    svg += "<text x=\"8\" y=\"" + detail::f2(dy + 4.0) + "\">Pooled</text>\n";
    svg += "<text x=\"" + detail::f2(width - 8.0) + "\" y=\"" + detail::f2(dy + 4.0) +
           "\" text-anchor=\"end\">" + detail::f2(p.estimate) + " [" + detail::f2(p.ci_lb) +
           ", " + detail::f2(p.ci_ub) + "]</text>\n";

    const double ay = dy + 30.0;
    svg += "<g class=\"axis\"><line x1=\"" + detail::f2(plot_x0) + "\" y1=\"" + detail::f2(ay) +
           "\" x2=\"" + detail::f2(plot_x1) + "\" y2=\"" + detail::f2(ay) + "\"/></g>\n";
    const double step = detail::nice_step((hi - lo) / 6.0);
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-12 * step; v += step) {
        svg += "<g class=\"tick\" data-value=\"" + detail::tick_label(v, step) + "\"><line x1=\"" +
               detail::f2(X(v)) + "\" y1=\"" + detail::f2(ay) + "\" x2=\"" + detail::f2(X(v)) +
               "\" y2=\"" + detail::f2(ay + 6.0) + "\"/><text x=\"" + detail::f2(X(v)) +
               "\" y=\"" + detail::f2(ay + 20.0) + "\" text-anchor=\"middle\">" +
               detail::tick_label(v, step) + "</text></g>\n";
    }
    svg += "<text class=\"xlab\" x=\"" + detail::f2((plot_x0 + plot_x1) / 2.0) + "\" y=\"" +
           detail::f2(ay + 44.0) + "\" text-anchor=\"middle\">" + detail::xml_escape(opt.xlab) +
           "</text>\n";
    svg += "</svg>\n";
    return svg;
}

} // namespace medipool::forest
