#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace vaxsim::svg {

/// Minimal SVG line chart: one polyline per series (one vertex per point),
/// dashed horizontal benchmark lines, axes with ticks, a small legend.
class LineChart {
  public:
    LineChart(std::string title, std::string x_label, std::string y_label);

    void add_series(const std::string &name, std::vector<std::pair<double, double>> points);
    void add_hline(const std::string &name, double y);

    /// Throws ValidationError when no series has any point.
    std::string render() const;
    void write(const std::filesystem::path &path) const;

  private:
    struct Series {
        std::string name;
        std::vector<std::pair<double, double>> points;
    };
    struct HLine {
        std::string name;
        double y;
    };

    std::string title_, x_label_, y_label_;
    std::vector<Series> series_;
    std::vector<HLine> hlines_;
};

} // namespace vaxsim::svg
