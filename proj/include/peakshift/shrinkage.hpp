#pragma once

// Empirical-Bayes shrinkage of per-user log peaks toward a moment-matched
// normal prior. Posterior mean on the log scale with
//   w = sigma2_pop / (sigma2_pop + sigma_obs^2).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "peakshift/engagement.hpp"
#include "peakshift/fit.hpp"
#include "peakshift/stats.hpp"

namespace peakshift {

inline constexpr double kPriorVarianceFloor = 0.01;
inline constexpr double kFallbackObsSd = 1.0;
inline constexpr std::size_t kMinValidBootstraps = 10;

struct PeakObservation {
    std::string user_id;
    std::string group;
    double log_peak = 0.0;
    double sigma_obs = kFallbackObsSd;
    std::size_t n_valid_boot = 0;
};

// Builds an observation from bootstrap log peaks: sample SD when at least ten
// are valid, otherwise the fallback of 1.0.
PeakObservation observation_from_bootstrap(std::string user_id, std::string group, double log_peak,
                                           std::span<const double> bootstrap_log_peaks);

struct UncertaintyOptions {
    int smoothing_window = 5;
    std::size_t B = 200;
    std::uint64_t seed = 42;
};

// Fits HillExp to the smoothed series, then refits B case resamples of the
// (n, value) points. A resample is valid when it converges to an interior
// peak. Throws DataError when the original fit has no interior peak.
PeakObservation estimate_obs_uncertainty(const ExposureSeries& series, const FitConfig& config,
                                         const UncertaintyOptions& options = {});

struct PopulationPrior {
    double mu_pop = 0.0;
    double sigma2_pop = kPriorVarianceFloor;
};

// Throws DataError with fewer than two observations.
PopulationPrior fit_prior(std::span<const PeakObservation> observations,
                          stats::VarianceConvention convention = stats::VarianceConvention::Population);

struct ShrinkageResult {
    std::string user_id;
    std::string group;
    double raw_peak = 0.0;
    double sigma_obs = 0.0;
    double weight = 1.0;
    double posterior_log_peak = 0.0;
    double posterior_peak = 0.0;
};

ShrinkageResult shrink(const PeakObservation& obs, const PopulationPrior& prior);

struct HierarchicalSummary {
    PopulationPrior prior;
    double naive_median = 0.0;
    double hierarchical_median = 0.0;
    double mean_weight = 0.0;
    std::vector<ShrinkageResult> users;
};

HierarchicalSummary hierarchical_peak(std::span<const PeakObservation> observations,
                                      stats::VarianceConvention convention = stats::VarianceConvention::Population);

}  // namespace peakshift
