#pragma once

// Bounded least-squares curve fitting and model-comparison statistics.
//
// Every family with a baseline/amplitude pair is linear in (c0, A) once the
// shape parameters are fixed. The fitter therefore runs Nelder-Mead only over
// the shape parameters (a, b, s, mu, sigma), each mapped from an unbounded
// coordinate through a logistic transform onto its box, and solves the
// box-constrained 2x2 linear problem for (c0, A) exactly at every evaluation.
// Flat and QuadraticPeak are solved in closed form.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "peakshift/engagement.hpp"
#include "peakshift/models.hpp"

namespace peakshift {

struct DataPoint {
    double n = 0.0;
    double value = 0.0;
    double weight = 1.0;
};

struct ParamBounds {
    double lo = 0.0;
    double hi = 1.0;
};

struct FitBounds {
    ParamBounds baseline{0.0, 1.0};     // c0
    ParamBounds amplitude{0.0, 1.0};    // A
    ParamBounds onset{0.1, 10.0};       // a
    ParamBounds half_max{0.1, 200.0};   // b
    ParamBounds decay{1.0, 1000.0};     // s
    ParamBounds center{0.0, 200.0};     // mu (GaussianPeak)
    ParamBounds width{0.5, 200.0};      // sigma (GaussianPeak)
};

struct FitConfig {
    FitBounds bounds;
    int n_starts = 16;
    int max_iterations = 2000;  // objective evaluations per simplex run
    double tolerance = 1e-10;   // relative SSE tolerance
    std::uint64_t seed = 42;
    double grid_step = kDefaultGridStep;
    // Peak search domain; defaults to [min n, max n] of the data.
    std::optional<PeakDomain> peak_domain;

    void validate() const;  // throws ConfigError
};

struct FitResult {
    ModelKind kind;
    ModelParams params;
    double sse = 0.0;
    double tss = 0.0;
    double r2 = 0.0;
    double log_likelihood = 0.0;
    double aic = 0.0;
    double bic = 0.0;
    std::size_t n_obs = 0;
    PeakLocation peak;
    bool converged = false;
};

// Number of free parameters used by AIC/BIC: family count plus noise variance.
std::size_t information_parameter_count(ModelKind kind) noexcept;

// Throws DataError with fewer than k + 2 positively weighted points.
FitResult fit(std::span<const DataPoint> data, ModelKind kind, const FitConfig& config);

// Profiled SSE at each multi-start initial point, alongside the final fit.
struct FitTrace {
    FitResult result;
    std::vector<double> start_sse;
};
FitTrace fit_with_trace(std::span<const DataPoint> data, ModelKind kind, const FitConfig& config);

// Weighted SSE of a parameter vector on the data.
double weighted_sse(std::span<const DataPoint> data, const ModelParams& params);

// All seven families on the same data.
class ModelFits {
public:
    explicit ModelFits(std::vector<FitResult> results);
    const FitResult& at(ModelKind kind) const;
    const std::vector<FitResult>& all() const noexcept { return results_; }
    // Family with the lowest AIC (earliest in kAllModels on ties).
    ModelKind best_by_aic() const;

private:
    std::vector<FitResult> results_;
};

ModelFits fit_all(std::span<const DataPoint> data, const FitConfig& config);
ModelFits fit_families(std::span<const DataPoint> data, std::span<const ModelKind> kinds,
                       const FitConfig& config);

std::vector<DataPoint> to_points(const BinnedCurve& curve, bool weight_by_count = true);
std::vector<DataPoint> to_points(std::span<const double> values);  // n = 1..L, weight 1

struct LrtResult {
    double statistic = 0.0;
    double df = 0.0;
    double p_value = 1.0;
};

// Nested-model likelihood ratio test with Lambda = n ln(sse_r / sse_f).
// Supported reductions: HillExp > MonotonicDecay (df 2), HillExp > Flat (df 4).
LrtResult compare_lrt(const FitResult& full, const FitResult& restricted);
LrtResult compare_lrt(const FitResult& full, const FitResult& restricted, double df);

// Fit on bins whose 1-based position is not a multiple of 5, score R^2 on the
// held-out fifth. May be negative.
double oos_r2(std::span<const DataPoint> data, ModelKind kind, const FitConfig& config);

enum class BootstrapStatistic { Peak, Params };

struct BootstrapResult {
    BootstrapStatistic statistic = BootstrapStatistic::Peak;
    std::size_t requested = 0;
    std::size_t failed = 0;
    // samples[d] holds the valid draws of dimension d (one dimension for Peak).
    std::vector<std::vector<double>> samples;
    std::vector<double> lower;  // 2.5th percentile per dimension
    std::vector<double> upper;  // 97.5th percentile per dimension
    // Pearson correlation between parameter draws (Params only), row-major.
    std::vector<double> correlation;
};

// Resamples observations with replacement B times and refits. A resample fails
// when the refit does not converge or (for Peak) has no peak. Throws FitError
// when more than half fail.
BootstrapResult bootstrap_fit(std::span<const DataPoint> data, ModelKind kind,
                              const FitConfig& config, std::size_t B,
                              BootstrapStatistic statistic, unsigned jobs = 1);

struct AscentResult {
    double p_value = 1.0;
    double slope = 0.0;
    double t_statistic = 0.0;
    std::size_t n_bins = 0;
    bool insufficient_support = false;  // fewer than three pre-peak bins
};

// One-sided OLS slope test on bins strictly before n_star.
AscentResult ascent_significance(const BinnedCurve& curve, double n_star);

struct AggregateFitOptions {
    int max_exposure = 200;
    std::size_t min_bin_count = 10;
    bool weight_by_count = true;
};

struct PermutationOptions {
    std::size_t B = 500;
    std::uint64_t seed = 42;
    // Multi-start count for the null refits; 0 means use the fit config's.
    int refit_starts = 0;
};

struct PermutationResult {
    double observed_r2 = 0.0;
    double p_value = 1.0;
    std::size_t exceedances = 0;
    std::vector<double> null_r2;
};

// Null: each user's engagement values shuffled across their own exposure
// indices, aggregate recomputed and refit with HillExp. p is the fraction of
// null R^2 >= observed R^2.
PermutationResult permutation_fit_test(std::span<const ExposureSeries> series,
                                       const AggregateFitOptions& aggregate,
                                       const FitConfig& config, const PermutationOptions& perm,
                                       unsigned jobs = 1);

// Bin-level variant for curves generated without per-user records: bin
// (mean, count) pairs are shuffled across exposure positions.
PermutationResult permutation_fit_test(const BinnedCurve& curve, const FitConfig& config,
                                       const PermutationOptions& perm, bool weight_by_count = true,
                                       unsigned jobs = 1);

}  // namespace peakshift
