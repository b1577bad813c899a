#include "vaxsim/svg.hpp"

#include "vaxsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace vaxsim::svg {

namespace {

constexpr double kWidth = 860, kHeight = 520;
constexpr double kLeft = 70, kRight = 190, kTop = 50, kBottom = 60;

const char *kColors[] = {"#3465a4", "#cc0000", "#4e9a06", "#f57900", "#75507b", "#0e8479"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string escape(const std::string &s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace

LineChart::LineChart(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

void LineChart::add_series(const std::string &name, std::vector<std::pair<double, double>> points) {
    series_.push_back({name, std::move(points)});
}

void LineChart::add_hline(const std::string &name, double y) { hlines_.push_back({name, y}); }

std::string LineChart::render() const {
    double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
    bool any = false;
    for (const auto &s : series_) {
        for (const auto &[x, y] : s.points) {
            if (!any) {
                x_min = x_max = x;
                y_min = y_max = y;
                any = true;
            }
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
        }
    }
    if (!any)
        throw ValidationError("chart '" + title_ + "' has no data points");
    for (const auto &h : hlines_) {
        y_min = std::min(y_min, h.y);
        y_max = std::max(y_max, h.y);
    }
    if (x_max == x_min)
        x_max = x_min + 1.0;
    double pad = (y_max - y_min) * 0.08;
    if (pad == 0.0)
        pad = std::abs(y_max) * 0.1 + 0.1;
    y_min -= pad;
    y_max += pad;

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto sx = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
    auto sy = [&](double y) { return kTop + plot_h - (y - y_min) / (y_max - y_min) * plot_h; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"16\">"
        << escape(title_) << "</text>\n";

    // Axes and ticks.
    out << "<g stroke=\"#333\" stroke-width=\"1\">\n";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
        << kTop + plot_h << "\"/>\n";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
        << "\"/>\n";
    out << "</g>\n";
    out << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    for (int t = 0; t <= 5; ++t) {
        double xv = x_min + (x_max - x_min) * t / 5.0;
        double yv = y_min + (y_max - y_min) * t / 5.0;
        out << "<line x1=\"" << sx(xv) << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << sx(xv) << "\" y2=\""
            << kTop + plot_h + 5 << "\" stroke=\"#333\"/>\n";
        out << "<text x=\"" << sx(xv) << "\" y=\"" << kTop + plot_h + 18 << "\" text-anchor=\"middle\">" << num(xv)
            << "</text>\n";
        out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << sy(yv) << "\" x2=\"" << kLeft << "\" y2=\"" << sy(yv)
            << "\" stroke=\"#333\"/>\n";
        out << "<text x=\"" << kLeft - 8 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\">" << num(yv)
            << "</text>\n";
    }
    out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 14 << "\" text-anchor=\"middle\">"
        << escape(x_label_) << "</text>\n";
    out << "<text x=\"18\" y=\"" << kTop + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << kTop + plot_h / 2 << ")\">" << escape(y_label_) << "</text>\n";
    out << "</g>\n";

    for (const auto &h : hlines_) {
        out << "<line x1=\"" << kLeft << "\" y1=\"" << sy(h.y) << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
            << sy(h.y) << "\" stroke=\"#888\" stroke-dasharray=\"6 4\"/>\n";
        out << "<text x=\"" << kLeft + plot_w + 6 << "\" y=\"" << sy(h.y) + 4
            << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#555\">" << escape(h.name) << "</text>\n";
    }

    double legend_y = kTop + 10;
    for (std::size_t i = 0; i < series_.size(); ++i) {
        const auto &s = series_[i];
        const char *color = kColors[i % (sizeof(kColors) / sizeof(kColors[0]))];
        if (!s.points.empty()) {
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
            for (std::size_t p = 0; p < s.points.size(); ++p) {
                if (p)
                    out << ' ';
                out << num(sx(s.points[p].first)) << ',' << num(sy(s.points[p].second));
            }
            out << "\"/>\n";
            if (s.points.size() <= 2)
                for (const auto &[x, y] : s.points)
                    out << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"3.5\" fill=\"" << color
                        << "\"/>\n";
        }
        out << "<line x1=\"" << kLeft + plot_w + 6 << "\" y1=\"" << legend_y << "\" x2=\"" << kLeft + plot_w + 26
            << "\" y2=\"" << legend_y << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << kLeft + plot_w + 30 << "\" y=\"" << legend_y + 4
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(s.name) << "</text>\n";
        legend_y += 18;
    }
    out << "</svg>\n";
    return out.str();
}

void LineChart::write(const std::filesystem::path &path) const {
    std::string body = render(); // render first: no partial file on error
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << body;
    out.flush();
    if (!out)
        throw IoError("write failed for " + path.string());
}

} // namespace vaxsim::svg
