#include "peakshift/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace peakshift::stats {

namespace {

void require_nonempty(std::span<const double> x, const char* what) {
    if (x.empty()) throw std::invalid_argument(std::string(what) + ": empty input");
}

}  // namespace

double mean(std::span<const double> x) {
    require_nonempty(x, "mean");
    long double s = 0.0L;
    for (double v : x) s += v;
    return static_cast<double>(s / static_cast<long double>(x.size()));
}

double variance(std::span<const double> x, VarianceConvention conv) {
    require_nonempty(x, "variance");
    const std::size_t n = x.size();
    if (conv == VarianceConvention::Sample && n < 2)
        throw std::invalid_argument("variance: sample convention needs n >= 2");
    const long double m = mean(x);
    long double ss = 0.0L;
    for (double v : x) ss += (v - m) * (v - m);
    const long double denom =
        conv == VarianceConvention::Population ? n : static_cast<long double>(n - 1);
    return static_cast<double>(ss / denom);
}

double stddev(std::span<const double> x, VarianceConvention conv) {
    return std::sqrt(variance(x, conv));
}

double quantile(std::span<const double> x, double q) {
    require_nonempty(x, "quantile");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q outside [0, 1]");
    std::vector<double> v(x.begin(), x.end());
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double median(std::span<const double> x) { return quantile(x, 0.5); }

double skewness(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 3) throw std::invalid_argument("skewness: needs n >= 3");
    const long double m = mean(x);
    long double m2 = 0.0L, m3 = 0.0L;
    for (double v : x) {
        const long double d = v - m;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    if (m2 <= 0.0L) return 0.0;
    const long double g1 = m3 / std::pow(m2, 1.5L);
    const long double nn = static_cast<long double>(n);
    return static_cast<double>(g1 * std::sqrt(nn * (nn - 1.0L)) / (nn - 2.0L));
}

double covariance(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("covariance: length mismatch");
    require_nonempty(x, "covariance");
    const long double mx = mean(x), my = mean(y);
    long double s = 0.0L;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
    return static_cast<double>(s / static_cast<long double>(x.size()));
}

double pearson(std::span<const double> x, std::span<const double> y) {
    const double vx = variance(x), vy = variance(y);
    if (vx <= 0.0 || vy <= 0.0) return 0.0;
    return std::clamp(covariance(x, y) / std::sqrt(vx * vy), -1.0, 1.0);
}

double chi_squared_sf(double statistic, double df) {
    if (!(df > 0.0)) throw std::invalid_argument("chi_squared_sf: df must be positive");
    if (std::isnan(statistic)) throw std::invalid_argument("chi_squared_sf: NaN statistic");
    if (statistic <= 0.0) return 1.0;
    if (std::isinf(statistic)) return 0.0;
    return boost::math::cdf(
        boost::math::complement(boost::math::chi_squared_distribution<double>(df), statistic));
}

double student_t_sf(double t, double df) {
    if (!(df > 0.0)) throw std::invalid_argument("student_t_sf: df must be positive");
    if (std::isnan(t)) throw std::invalid_argument("student_t_sf: NaN statistic");
    if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
    return boost::math::cdf(
        boost::math::complement(boost::math::students_t_distribution<double>(df), t));
}

double normal_sf(double z) {
    if (std::isnan(z)) throw std::invalid_argument("normal_sf: NaN statistic");
    if (std::isinf(z)) return z > 0 ? 0.0 : 1.0;
    return boost::math::cdf(boost::math::complement(boost::math::normal_distribution<double>(), z));
}

}  // namespace peakshift::stats
