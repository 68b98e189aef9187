#pragma once

// Nelder-Mead simplex minimizer (internal).

#include <functional>
#include <span>
#include <vector>

namespace peakshift::detail {

struct SimplexOptions {
    double initial_step = 0.5;
    int max_evaluations = 2000;
    double f_tolerance = 1e-10;   // relative spread of vertex values
    double x_tolerance = 1e-9;    // simplex diameter in coordinate units
};

struct SimplexResult {
    std::vector<double> x;
    double f = 0.0;
    int evaluations = 0;
    bool converged = false;
};

using Objective = std::function<double(std::span<const double>)>;

SimplexResult nelder_mead(const Objective& f, std::vector<double> x0, const SimplexOptions& opt);

}  // namespace peakshift::detail
