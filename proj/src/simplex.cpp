#include "simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace peakshift::detail {

SimplexResult nelder_mead(const Objective& f, std::vector<double> x0, const SimplexOptions& opt) {
    constexpr double kReflect = 1.0, kExpand = 2.0, kContract = 0.5, kShrink = 0.5;
    const std::size_t dim = x0.size();
    SimplexResult res;

    auto eval = [&](const std::vector<double>& x) {
        ++res.evaluations;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::max();
    };

    std::vector<std::vector<double>> pts(dim + 1, x0);
    std::vector<double> vals(dim + 1);
    for (std::size_t i = 0; i < dim; ++i) pts[i + 1][i] += opt.initial_step;
    for (std::size_t i = 0; i <= dim; ++i) vals[i] = eval(pts[i]);

    std::vector<std::size_t> order(dim + 1);
    std::vector<double> centroid(dim), xr(dim), xe(dim), xc(dim);

    while (res.evaluations < opt.max_evaluations) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
        const std::size_t best = order.front(), worst = order.back(),
                          second = order[dim > 0 ? dim - 1 : 0];

        const double spread = vals[worst] - vals[best];
        double diameter = 0.0;
        for (std::size_t i = 0; i <= dim; ++i)
            for (std::size_t j = 0; j < dim; ++j)
                diameter = std::max(diameter, std::abs(pts[i][j] - pts[best][j]));
        if (spread <= opt.f_tolerance * std::abs(vals[best]) + 1e-300 ||
            diameter <= opt.x_tolerance) {
            res.converged = true;
            break;
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= dim; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < dim; ++j) centroid[j] += pts[i][j];
        }
        for (double& c : centroid) c /= static_cast<double>(dim);

        for (std::size_t j = 0; j < dim; ++j)
            xr[j] = centroid[j] + kReflect * (centroid[j] - pts[worst][j]);
        const double fr = eval(xr);

        if (fr < vals[best]) {
            for (std::size_t j = 0; j < dim; ++j)
                xe[j] = centroid[j] + kExpand * (xr[j] - centroid[j]);
            const double fe = eval(xe);
            if (fe < fr) {
                pts[worst] = xe;
                vals[worst] = fe;
            } else {
                pts[worst] = xr;
                vals[worst] = fr;
            }
            continue;
        }
        if (fr < vals[second]) {
            pts[worst] = xr;
            vals[worst] = fr;
            continue;
        }

        const bool outside = fr < vals[worst];
        for (std::size_t j = 0; j < dim; ++j)
            xc[j] = outside ? centroid[j] + kContract * (xr[j] - centroid[j])
                            : centroid[j] + kContract * (pts[worst][j] - centroid[j]);
        const double fc = eval(xc);
        if (fc < (outside ? fr : vals[worst])) {
            pts[worst] = xc;
            vals[worst] = fc;
            continue;
        }

        for (std::size_t i = 0; i <= dim; ++i) {
            if (i == best) continue;
            for (std::size_t j = 0; j < dim; ++j)
                pts[i][j] = pts[best][j] + kShrink * (pts[i][j] - pts[best][j]);
            vals[i] = eval(pts[i]);
        }
    }

    const auto best_it = std::min_element(vals.begin(), vals.end());
    const auto bi = static_cast<std::size_t>(best_it - vals.begin());
    res.x = pts[bi];
    res.f = vals[bi];
    return res;
}

}  // namespace peakshift::detail
