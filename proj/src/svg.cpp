#include "curveflow/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace curveflow::svg {

namespace {

constexpr double kWidth = 640.0, kHeight = 640.0, kMargin = 48.0;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string label_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void include(double v) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void finish() {
        if (!(lo <= hi)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
    }
    double map(double v, double a, double b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

void header(std::ostringstream& out, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\"" << num(kHeight)
        << "\" viewBox=\"0 0 " << num(kWidth) << ' ' << num(kHeight) << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << num(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"16\">" << title << "</text>\n";
    out << "<rect x=\"" << num(kMargin) << "\" y=\"" << num(kMargin) << "\" width=\"" << num(kWidth - 2 * kMargin)
        << "\" height=\"" << num(kHeight - 2 * kMargin) << "\" fill=\"none\" stroke=\"#888\"/>\n";
}

void legend(std::ostringstream& out, std::size_t index, const std::string& color, const std::string& text) {
    const double y = kHeight - 30.0 + 14.0 * static_cast<double>(index) - 14.0;
    out << "<rect x=\"" << num(kMargin) << "\" y=\"" << num(y - 9) << "\" width=\"10\" height=\"10\" fill=\""
        << color << "\"/>\n";
    out << "<text x=\"" << num(kMargin + 16) << "\" y=\"" << num(y) << "\" font-family=\"sans-serif\" "
        << "font-size=\"11\">" << text << "</text>\n";
}

}  // namespace

std::string scatter(const std::vector<ScatterLayer>& layers, const std::string& title) {
    Range rx, ry;
    for (const auto& layer : layers) {
        for (std::size_t i = 0; i < layer.points->rows(); ++i) {
            rx.include((*layer.points)(i, 0));
            ry.include((*layer.points)(i, 1));
        }
    }
    rx.finish();
    ry.finish();
    // Equal aspect ratio.
    const double span = std::max(rx.hi - rx.lo, ry.hi - ry.lo);
    const double cx = 0.5 * (rx.lo + rx.hi), cy = 0.5 * (ry.lo + ry.hi);
    rx.lo = cx - 0.55 * span;
    rx.hi = cx + 0.55 * span;
    ry.lo = cy - 0.55 * span;
    ry.hi = cy + 0.55 * span;

    std::ostringstream out;
    header(out, title);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        out << "<g fill=\"" << layer.color << "\" fill-opacity=\"0.5\">\n";
        for (std::size_t i = 0; i < layer.points->rows(); ++i) {
            const double x = rx.map((*layer.points)(i, 0), kMargin, kWidth - kMargin);
            const double y = ry.map((*layer.points)(i, 1), kHeight - kMargin, kMargin);
            out << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"1.8\"/>\n";
        }
        out << "</g>\n";
        legend(out, l, layer.color, layer.label);
    }
    out << "</svg>\n";
    return out.str();
}

std::string lines(const std::vector<double>& x, const std::vector<LineSeries>& series, const std::string& title) {
    Range rx;
    for (double v : x) {
        rx.include(v);
    }
    rx.finish();
    std::ostringstream out;
    header(out, title);
    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& line = series[s];
        Range ry;
        for (double v : line.y) {
            ry.include(v);
        }
        ry.finish();
        out << "<polyline fill=\"none\" stroke=\"" << line.color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < std::min(x.size(), line.y.size()); ++i) {
            if (i > 0) out << ' ';
            out << num(rx.map(x[i], kMargin, kWidth - kMargin)) << ','
                << num(ry.map(line.y[i], kHeight - kMargin, kMargin));
        }
        out << "\"/>\n";
        legend(out, s, line.color,
               line.label + " [" + label_num(ry.lo) + ", " + label_num(ry.hi) + "]");
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace curveflow::svg
