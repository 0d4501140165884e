#pragma once

// Minimal static SVG charts: line/scatter series on linear or log axes, and
// bar histograms.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace hbnf::svg {

struct Series {
    std::string label;
    std::vector<double> x, y;
    std::string color = "#1f77b4";
    bool markers = true;
    bool line = true;
    bool dashed = false;
};

struct Chart {
    std::string title, x_label, y_label;
    bool log_x = false, log_y = false;
    std::vector<Series> series;
    std::vector<std::string> notes;  // drawn in the upper-left corner
    int width = 640, height = 420;
};

namespace detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Axis {
    double lo, hi;
    bool log;
    double map(double v, double a, double b) const {
        const double t = log ? (std::log10(v) - lo) / (hi - lo) : (v - lo) / (hi - lo);
        return a + t * (b - a);
    }
    std::vector<double> ticks() const {
        std::vector<double> t;
        if (log) {
            for (int e = static_cast<int>(std::ceil(lo - 1e-9)); e <= std::floor(hi + 1e-9); ++e) t.push_back(std::pow(10.0, e));
            if (t.size() < 2) t = {std::pow(10.0, lo), std::pow(10.0, hi)};
        } else {
            const double span = hi - lo;
            const double step = std::pow(10.0, std::floor(std::log10(span / 5)));
            const double nice = span / step > 25 ? 5 * step : span / step > 10 ? 2 * step : step;
            for (double v = std::ceil(lo / nice) * nice; v <= hi + 1e-12 * span; v += nice) t.push_back(v);
        }
        return t;
    }
};

inline Axis make_axis(const std::vector<double>& values, bool log) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : values) {
        if (!std::isfinite(v) || (log && v <= 0)) continue;
        const double u = log ? std::log10(v) : v;
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    if (!std::isfinite(lo)) lo = 0, hi = 1;
    if (hi - lo < 1e-12) {
        const double pad = log ? 0.5 : std::max(std::abs(lo) * 0.1, 1.0);
        lo -= pad;
        hi += pad;
    } else {
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
    return {lo, hi, log};
}

}  // namespace detail

inline std::string render(const Chart& c) {
    using detail::fmt;
    std::vector<double> xs, ys;
    for (const auto& s : c.series) {
        xs.insert(xs.end(), s.x.begin(), s.x.end());
        ys.insert(ys.end(), s.y.begin(), s.y.end());
    }
    const auto ax = detail::make_axis(xs, c.log_x);
    const auto ay = detail::make_axis(ys, c.log_y);
    const double L = 80, R = c.width - 20, T = 40, B = c.height - 55;
    std::string o;
    o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(c.width) + "\" height=\"" +
         std::to_string(c.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o += "<text x=\"" + fmt(c.width / 2.0) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + detail::escape(c.title) + "</text>\n";
    o += "<rect x=\"" + fmt(L) + "\" y=\"" + fmt(T) + "\" width=\"" + fmt(R - L) + "\" height=\"" + fmt(B - T) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double t : ax.ticks()) {
        const double px = ax.map(t, L, R);
        o += "<line x1=\"" + fmt(px) + "\" y1=\"" + fmt(B) + "\" x2=\"" + fmt(px) + "\" y2=\"" + fmt(B + 5) + "\" stroke=\"black\"/>\n";
        o += "<text x=\"" + fmt(px) + "\" y=\"" + fmt(B + 18) + "\" text-anchor=\"middle\">" + fmt(t) + "</text>\n";
    }
    for (double t : ay.ticks()) {
        const double py = ay.map(t, B, T);
        o += "<line x1=\"" + fmt(L - 5) + "\" y1=\"" + fmt(py) + "\" x2=\"" + fmt(L) + "\" y2=\"" + fmt(py) + "\" stroke=\"black\"/>\n";
        o += "<text x=\"" + fmt(L - 8) + "\" y=\"" + fmt(py + 4) + "\" text-anchor=\"end\">" + fmt(t) + "</text>\n";
    }
    o += "<text x=\"" + fmt((L + R) / 2) + "\" y=\"" + fmt(c.height - 12.0) + "\" text-anchor=\"middle\">" + detail::escape(c.x_label) + "</text>\n";
    o += "<text transform=\"translate(16," + fmt((T + B) / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         detail::escape(c.y_label) + "</text>\n";
    double legend_y = T + 16;
    for (const auto& s : c.series) {
        std::string pts;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if ((c.log_x && s.x[i] <= 0) || (c.log_y && s.y[i] <= 0) || !std::isfinite(s.y[i])) continue;
            pts += fmt(ax.map(s.x[i], L, R)) + "," + fmt(ay.map(s.y[i], B, T)) + " ";
        }
        if (s.line && !pts.empty())
            o += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.5\"" +
                 (s.dashed ? " stroke-dasharray=\"5,4\"" : "") + " points=\"" + pts + "\"/>\n";
        if (s.markers) {
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if ((c.log_x && s.x[i] <= 0) || (c.log_y && s.y[i] <= 0) || !std::isfinite(s.y[i])) continue;
                o += "<circle cx=\"" + fmt(ax.map(s.x[i], L, R)) + "\" cy=\"" + fmt(ay.map(s.y[i], B, T)) + "\" r=\"3\" fill=\"" +
                     s.color + "\"/>\n";
            }
        }
        if (!s.label.empty()) {
            o += "<rect x=\"" + fmt(R - 150) + "\" y=\"" + fmt(legend_y - 9) + "\" width=\"10\" height=\"10\" fill=\"" + s.color + "\"/>\n";
            o += "<text x=\"" + fmt(R - 135) + "\" y=\"" + fmt(legend_y) + "\">" + detail::escape(s.label) + "</text>\n";
            legend_y += 16;
        }
    }
    double note_y = T + 16;
    for (const auto& n : c.notes) {
        o += "<text x=\"" + fmt(L + 10) + "\" y=\"" + fmt(note_y) + "\">" + detail::escape(n) + "</text>\n";
        note_y += 16;
    }
    o += "</svg>\n";
    return o;
}

/// Bars over [edges[i], edges[i+1]).
inline std::string render_histogram(const std::string& title, const std::string& x_label, const std::vector<double>& edges,
                                    const std::vector<double>& counts, int width = 640, int height = 420) {
    using detail::fmt;
    if (edges.size() != counts.size() + 1) throw std::invalid_argument("render_histogram: edges/counts size mismatch");
    const double L = 70, R = width - 20, T = 40, B = height - 55;
    const double lo = edges.front(), hi = edges.back();
    double cmax = 1;
    for (double c : counts) cmax = std::max(cmax, c);
    std::string o;
    o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" + std::to_string(height) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o += "<text x=\"" + fmt(width / 2.0) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + detail::escape(title) + "</text>\n";
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double x0 = L + (edges[i] - lo) / (hi - lo) * (R - L);
        const double x1 = L + (edges[i + 1] - lo) / (hi - lo) * (R - L);
        const double h = counts[i] / cmax * (B - T);
        o += "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(B - h) + "\" width=\"" + fmt(std::max(x1 - x0 - 1, 0.5)) + "\" height=\"" +
             fmt(h) + "\" fill=\"#4c72b0\"/>\n";
    }
    o += "<rect x=\"" + fmt(L) + "\" y=\"" + fmt(T) + "\" width=\"" + fmt(R - L) + "\" height=\"" + fmt(B - T) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    const detail::Axis ax{lo, hi, false};
    for (double t : ax.ticks()) {
        const double px = ax.map(t, L, R);
        o += "<text x=\"" + fmt(px) + "\" y=\"" + fmt(B + 18) + "\" text-anchor=\"middle\">" + fmt(t) + "</text>\n";
    }
    o += "<text x=\"" + fmt(L - 8) + "\" y=\"" + fmt(T + 4) + "\" text-anchor=\"end\">" + fmt(cmax) + "</text>\n";
    o += "<text x=\"" + fmt(L - 8) + "\" y=\"" + fmt(B + 4) + "\" text-anchor=\"end\">0</text>\n";
    o += "<text x=\"" + fmt((L + R) / 2) + "\" y=\"" + fmt(height - 12.0) + "\" text-anchor=\"middle\">" + detail::escape(x_label) + "</text>\n";
    o += "</svg>\n";
    return o;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << content;
}

}  // namespace hbnf::svg
