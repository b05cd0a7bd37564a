#pragma once

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace fibernet::svg {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct Axes {
    std::string title;
    std::string xlabel;
    std::string ylabel;
};

std::string bar_chart(const Axes& axes, const std::vector<std::string>& labels, const std::vector<double>& values);

/// One bar per (category, series) pair, series side by side within a category.
std::string grouped_bar_chart(const Axes& axes, const std::vector<std::string>& categories,
                              const std::vector<Series>& series);

std::string line_chart(const Axes& axes, const std::vector<Series>& series);

/// Markers only; `vertical_line` draws a dashed guide at that x when finite.
std::string scatter_chart(const Axes& axes, const std::vector<Series>& series,
                          double vertical_line = std::numeric_limits<double>::quiet_NaN());

/// Cell (r, c) sits at (xs[c], ys[r]). NaN cells are masked with a cross.
/// Overlay curves are placed by interpolating their coordinates between
/// the cell centres.
std::string heatmap(const Axes& axes, const std::vector<double>& xs, const std::vector<double>& ys,
                    const Eigen::MatrixXd& values, const std::vector<Series>& overlays = {});

}  // namespace fibernet::svg
