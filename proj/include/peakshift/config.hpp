#pragma once

// Run configuration: one JSON document with a section per pipeline stage.
// Every key is optional; unknown keys are rejected with ConfigError.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "peakshift/calibration.hpp"
#include "peakshift/classify.hpp"
#include "peakshift/diagnostics.hpp"
#include "peakshift/engagement.hpp"
#include "peakshift/fit.hpp"
#include "peakshift/synth.hpp"

namespace peakshift {

struct RunConfig {
    // ingest
    ColumnSchema schema;
    double engagement_threshold = kDefaultEngagementThreshold;
    std::optional<std::string> group;

    // preprocessing and per-user gates
    int smoothing_window = 5;
    std::size_t min_raw_length = 15;
    std::size_t min_smoothed_length = 19;

    FitConfig fit;
    AggregateFitOptions aggregate;

    // classifier
    std::vector<StrictVariant> variants{strict_variant(), no_decline_variant(), original_variant(),
                                        strict_variant(0.15), strict_variant(0.20)};

    // resampling
    std::size_t eb_bootstrap = 200;
    std::size_t distortion_bootstrap = 1000;
    std::size_t permutation_B = 500;
    int permutation_refit_starts = 4;
    std::size_t within_user_B = 10000;

    // distortion stability analysis
    std::size_t stability_subsample = 0;
    std::optional<std::pair<double, double>> stability_window;

    // calibration
    std::size_t calibration_n = 500;
    std::optional<double> observed_rate;
    LengthSource calibration_lengths;
    int generator_smoothing_window = 5;

    FactorialConfig factorial;
    FactorialPipeline factorial_pipeline;
    PowerGrid power;

    std::uint64_t seed = 42;
    unsigned jobs = 1;
    std::string output_dir = "out";

    UserPipeline user_pipeline() const;
    AggregatePipeline aggregate_pipeline() const;
};

// Throws ConfigError on unknown keys, wrong types or invalid values.
RunConfig parse_config(const nlohmann::json& document);
RunConfig load_config(const std::string& path);

// Canonical form covering every setting; hashing it identifies a run.
nlohmann::ordered_json config_to_json(const RunConfig& config);

}  // namespace peakshift
