#pragma once

// Synthetic null calibration of the per-user classifier: null users of known
// shape go through the same smoothing, fitting and gating as real users.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "peakshift/classify.hpp"
#include "peakshift/synth.hpp"

namespace peakshift {

struct NullGeneratorConfig {
    LengthSource lengths;
    // Preprocessing the generated data is meant to be compared under; must
    // match the pipeline's.
    int smoothing_window = 5;
};

struct SncConfig {
    NullGeneratorConfig generator;
    UserPipeline pipeline;
    std::size_t n_per_condition = 500;
    std::uint64_t seed = 42;
    std::optional<double> observed_rate;
    std::vector<StrictVariant> variants{strict_variant()};
};

struct CalibrationRow {
    std::string variant;
    double fp_monotonic = 0.0;
    double fp_flat = 0.0;
    double tp_inverted_u = 0.0;
    double selectivity = 0.0;  // tp / fp_monotonic, 0 when fp is 0
    std::optional<double> excess;
    std::optional<PrevalenceEstimate> prevalence;
};

struct CalibrationReport {
    std::size_t n_per_condition = 0;
    // Users long enough to pass the length gates; rates use these as denominators.
    std::size_t eligible_monotonic = 0;
    std::size_t eligible_flat = 0;
    std::size_t eligible_inverted_u = 0;
    std::vector<CalibrationRow> rows;
};

// Throws ConfigError when the generator and pipeline smoothing disagree or
// n_per_condition < 100.
CalibrationReport snc_calibrate(const SncConfig& config, unsigned jobs = 1);

}  // namespace peakshift
