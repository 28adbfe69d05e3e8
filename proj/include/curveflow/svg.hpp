#pragma once

#include <string>
#include <vector>

#include "curveflow/diffengine.hpp"

namespace curveflow::svg {

struct ScatterLayer {
    const Matrix* points;
    std::string color;
    std::string label;
};

struct LineSeries {
    std::vector<double> y;
    std::string color;
    std::string label;
};

/// Scatter plot of the first two columns of each layer, drawn in order.
std::string scatter(const std::vector<ScatterLayer>& layers, const std::string& title);

/// Polylines over a shared x axis. Each series gets its own y range (min-max
/// normalised), with the range printed in the legend.
std::string lines(const std::vector<double>& x, const std::vector<LineSeries>& series, const std::string& title);

}  // namespace curveflow::svg
