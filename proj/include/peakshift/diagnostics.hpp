#pragma once

// Aggregation-distortion diagnostics: the distortion factor, the selection
// identity E[n* | S=1] - E[n*] = Cov(n*, S) / P(S=1), the pooled cross-dataset
// selection estimator, and the within-user permutation test.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace peakshift {

struct PeakSummary {
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
    double iqr = 0.0;
    std::optional<double> skewness;  // needs >= 3 peaks
    std::size_t count = 0;
};

PeakSummary summarize_peaks(std::span<const double> peaks);

struct DistortionOptions {
    std::size_t bootstrap = 1000;
    std::size_t subsample_size = 0;  // 0: no stability analysis
    std::optional<std::pair<double, double>> stability_window;
    std::uint64_t seed = 42;
};

struct DistortionReport {
    std::string group;
    double aggregate_peak = 0.0;
    PeakSummary individual;
    double distortion = 0.0;  // aggregate_peak / median
    double ci_low = 0.0;      // bootstrap 95% interval of the median
    double ci_high = 0.0;
    std::optional<double> stability_fraction;
};

// Throws DataError with fewer than 5 peaks or a zero median, and
// std::invalid_argument for a non-positive aggregate peak.
DistortionReport distortion_factor(double aggregate_peak, std::span<const double> peaks,
                                   const DistortionOptions& options = {},
                                   const std::string& group = "all");

// One atom of a population: a peak, whether it survives to the reference
// exposure, and its probability mass (any positive weight; normalized).
struct PopulationUnit {
    double peak = 0.0;
    bool survived = false;
    double weight = 1.0;
};

struct SelectionIdentity {
    double lhs = 0.0;  // E[n* | S=1] - E[n*]
    double rhs = 0.0;  // Cov(n*, S) / P(S=1)
    double abs_diff = 0.0;
    double survival_rate = 0.0;
};

// Throws DataError when nobody survives.
SelectionIdentity selection_identity_check(std::span<const PopulationUnit> population);

struct NonparametricCheck {
    SelectionIdentity identity;
    // Survivor-conditional CDF lies pointwise at or below the unconditional one.
    bool dominance = false;
};

// Identity on the empirical joint law plus the dominance flag. Throws
// std::logic_error if dominance holds but the left side is negative.
NonparametricCheck nonparametric_distortion_check(std::span<const PopulationUnit> population);

struct SelectionSummary {
    std::string dataset;
    double rho = 0.0;    // corr(n*, S(n_ref))
    double sigma = 0.0;  // population SD of n*
    double s_bar = 1.0;  // P(S(n_ref) = 1)
    std::size_t n = 0;
    double n_ref = 0.0;
};

// S_u(n_ref) = 1[n_max_u >= n_ref]; n_ref defaults to the median n_max.
SelectionSummary selection_summary(std::span<const double> peaks, std::span<const int> n_max,
                                   std::optional<double> n_ref = std::nullopt,
                                   const std::string& dataset = "");

struct PooledResult {
    double delta_hat = 0.0;
    double variance_bound = 0.0;       // N^-1 max_d (rho sigma)^2 (1 - S)/S
    double null_variance_bound = 0.0;  // N^-1 max_d sigma^2 (1 - S)/S, used by z
    double z = 0.0;
    double p_one_sided = 0.5;
    std::string note;
};

// Throws std::invalid_argument on an empty input, a summary outside its
// domain, or s_bar = 0.
PooledResult pooled_distortion(std::span<const SelectionSummary> summaries);

struct UserGroupPeak {
    std::string user_id;
    std::string group;
    double peak = 0.0;
};

struct WithinUserPermutation {
    double r_obs = 0.0;  // max - min of group median peaks
    double p_value = 1.0;
    std::size_t permutations = 0;
    std::size_t multi_group_users = 0;
    bool exchangeable = true;  // false when no user spans two groups
};

// p = share of permutations whose range is <= the observed range. Throws
// std::invalid_argument with fewer than two groups.
WithinUserPermutation within_user_permutation(std::span<const UserGroupPeak> peaks,
                                              std::size_t B = 10000, std::uint64_t seed = 42,
                                              unsigned jobs = 1);

}  // namespace peakshift
