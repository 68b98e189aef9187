#pragma once

// Synthetic populations with known ground truth: the survival/amplitude
// factorial, null users for classifier calibration, bin-level aggregates for
// power analysis, and the six aggregate validation scenarios.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "peakshift/classify.hpp"
#include "peakshift/engagement.hpp"
#include "peakshift/fit.hpp"
#include "peakshift/models.hpp"
#include "peakshift/rng.hpp"

namespace peakshift {

// Peak targeting for the Hill-exponential family. For fixed onset a and decay
// s the maximum satisfies b^a (a s - n*) = n*^(a+1), so
//   b = (n*^(a+1) / (a s - n*))^(1/a),
// which exists iff a s > n*. Returns nullopt otherwise.
std::optional<double> half_max_for_peak(double onset, double decay, double n_star);

struct DecayLaw {
    // Absolute: s ~ U(lo, hi). Proportional: s = kappa n* with kappa ~ U(lo, hi).
    enum class Mode { Absolute, Proportional };
    Mode mode = Mode::Proportional;
    double lo = 2.0;
    double hi = 5.0;
};

struct SurvivalLaw {
    // n_max = max(floor, round(gamma m (n*/m)^elasticity exp(eta))) with m the
    // configured peak median and eta ~ Normal(0, eta_sd). Elasticity 1 is the
    // plain proportional law.
    double gamma = 0.45;
    double elasticity = 2.0;
    double eta_sd = 0.25;
    int floor = 15;
};

struct AmplitudeLaw {
    double intercept = 0.2;
    double slope = 0.3;
    double noise_sd = 0.03;
    double lo = 0.05;
    double hi = 0.6;
    double constant = 0.35;  // used when the correlation is off
};

struct FactorialConfig {
    std::size_t n_users = 1000;
    bool survival_bias = false;
    bool amplitude_correlation = false;
    double peak_median = 12.0;
    double peak_log_sd = 0.65;  // lognormal skewness 2.56
    double baseline = 0.2;
    double onset = 2.0;
    int unbiased_length = 120;
    DecayLaw decay;
    SurvivalLaw survival;
    AmplitudeLaw amplitude;
    std::uint64_t seed = 42;

    void validate() const;  // throws ConfigError
};

struct SyntheticUser {
    std::string user_id;
    HillExpParams params;
    double true_peak = 0.0;
    int n_max = 0;
    std::vector<std::uint8_t> engagement;  // e(1..n_max)
};

struct Population {
    std::vector<SyntheticUser> users;
    std::size_t resamples = 0;  // users redrawn because the peak was unreachable
};

Population generate_population(const FactorialConfig& config, unsigned jobs = 1);

// View as exposure series (group "synthetic").
std::vector<ExposureSeries> to_series(const Population& population,
                                      const std::string& group = "synthetic");

// Events CSV with rating 5 for engaged and 2 otherwise, timestamp = n.
void write_population_events(std::ostream& out, const Population& population,
                             const std::string& group = "synthetic");
// CSV `user_id,true_peak,n_max`.
void write_true_peaks(std::ostream& out, const Population& population);

enum class PeakMode { GroundTruth, Fitted };

struct FactorialPipeline {
    AggregateFitOptions aggregate{.max_exposure = 400, .min_bin_count = 30, .weight_by_count = true};
    FitConfig fit;
    PeakMode mode = PeakMode::GroundTruth;
    int smoothing_window = 5;
    int fitted_starts = 4;  // multi-start count for per-user fits in Fitted mode
};

struct FactorialCell {
    bool survival_bias = false;
    bool amplitude_correlation = false;
    double individual_median = 0.0;
    std::size_t individual_count = 0;
    double aggregate_peak = 0.0;
    bool aggregate_interior = false;
    double distortion = 0.0;
    bool failed = false;
    std::string message;
};

// Cells in the order (on,on), (on,off), (off,on), (off,off) of
// (survival, amplitude). A failing cell is marked and the run continues.
std::vector<FactorialCell> run_factorial(const FactorialConfig& base,
                                         const FactorialPipeline& pipeline, unsigned jobs = 1);

// Null users for classifier calibration.
enum class NullUserKind { Monotonic, Flat, TrueInvertedU };
std::string_view to_string(NullUserKind kind) noexcept;

struct LengthSource {
    // Empty: uniform integer lengths in [uniform_lo, uniform_hi]. Otherwise
    // lengths are drawn with replacement from the empirical list.
    std::vector<int> empirical;
    int uniform_lo = 15;
    int uniform_hi = 75;
};

struct NullUser {
    ExposureSeries series;
    ModelParams truth;
};

std::vector<NullUser> generate_null_users(NullUserKind kind, std::size_t n,
                                          const LengthSource& lengths, std::uint64_t seed);

// Power analysis at the bin level: bin mean ~ Binomial(bin_size, C(n)) / bin_size.
struct PowerTier {
    std::string name;
    double amplitude = 0.0;  // realized max - min of the generating curve
};

struct PowerGrid {
    std::vector<PowerTier> tiers{{"strong", 0.18}, {"moderate", 0.10}, {"weak", 0.05}, {"very_weak", 0.03}};
    std::vector<std::size_t> bin_sizes{100, 200, 500, 1000};
    std::size_t reps = 30;
    // Shape shared by all tiers; the amplitude is rescaled per tier.
    double baseline = 0.3;
    double onset = 2.0;
    double half_max = 5.0;
    double decay = 30.0;
    int max_exposure = 100;
};

// Generating curve of a tier, scaled so max - min over n = 1..max_exposure
// equals the tier amplitude.
HillExpParams power_curve(const PowerGrid& grid, double amplitude);
double realized_amplitude(const HillExpParams& params, int max_exposure);

BinnedCurve binomial_curve(const HillExpParams& params, int max_exposure, std::size_t bin_size,
                           Engine& eng, const std::string& group = "synthetic");

struct PowerCell {
    std::string tier;
    double amplitude = 0.0;
    std::size_t bin_size = 0;
    std::size_t detections = 0;
    std::size_t reps = 0;
    double power = 0.0;
};

std::vector<PowerCell> power_analysis(const PowerGrid& grid, const AggregatePipeline& pipeline,
                                      std::uint64_t seed, unsigned jobs = 1);

enum class AggregateScenario { StrongInvertedU, WeakInvertedU, NoisyInvertedU, Mixed, Monotonic, Flat };
inline constexpr std::array<AggregateScenario, 6> kAllScenarios = {
    AggregateScenario::StrongInvertedU, AggregateScenario::WeakInvertedU,
    AggregateScenario::NoisyInvertedU,  AggregateScenario::Mixed,
    AggregateScenario::Monotonic,       AggregateScenario::Flat,
};
std::string_view to_string(AggregateScenario s) noexcept;

// Bin-level population curve for a validation scenario.
BinnedCurve scenario_curve(AggregateScenario scenario, std::uint64_t seed);

}  // namespace peakshift
