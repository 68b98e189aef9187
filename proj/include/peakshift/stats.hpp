#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace peakshift::stats {

enum class VarianceConvention { Population, Sample };

double mean(std::span<const double> x);
double variance(std::span<const double> x,
                VarianceConvention conv = VarianceConvention::Population);
double stddev(std::span<const double> x,
              VarianceConvention conv = VarianceConvention::Population);

// Linear-interpolation quantile (Hyndman-Fan type 7); q in [0, 1].
double quantile(std::span<const double> x, double q);
double median(std::span<const double> x);

// Adjusted Fisher-Pearson standardized moment coefficient (G1). Needs n >= 3.
double skewness(std::span<const double> x);

// Population covariance / Pearson correlation. Correlation is 0 when either
// input has zero variance.
double covariance(std::span<const double> x, std::span<const double> y);
double pearson(std::span<const double> x, std::span<const double> y);

// Upper-tail probabilities.
double chi_squared_sf(double statistic, double df);
double student_t_sf(double t, double df);
double normal_sf(double z);

}  // namespace peakshift::stats
