#include "peakshift/calibration.hpp"

#include "peakshift/error.hpp"
#include "peakshift/parallel.hpp"

namespace peakshift {

CalibrationReport snc_calibrate(const SncConfig& config, unsigned jobs) {
    if (config.n_per_condition < 100) throw ConfigError("calibration needs N >= 100 per condition");
    if (config.generator.smoothing_window != config.pipeline.smoothing_window)
        throw ConfigError("null generator and pipeline disagree on the smoothing window (" +
                          std::to_string(config.generator.smoothing_window) + " vs " +
                          std::to_string(config.pipeline.smoothing_window) + ")");
    if (config.variants.empty()) throw ConfigError("no classifier variants");

    const std::array<NullUserKind, 3> kinds = {NullUserKind::Monotonic, NullUserKind::Flat,
                                               NullUserKind::TrueInvertedU};
    std::vector<NullUser> users;
    std::vector<std::size_t> kind_of;
    for (std::size_t k = 0; k < kinds.size(); ++k) {
        auto batch = generate_null_users(kinds[k], config.n_per_condition, config.generator.lengths,
                                         config.seed);
        for (auto& u : batch) {
            users.push_back(std::move(u));
            kind_of.push_back(k);
        }
    }

    // One fit per user; every variant re-reads the same gate values.
    std::vector<std::optional<StrictGateReport>> reports(users.size());
    parallel_for(users.size(), jobs, [&](std::size_t i) {
        reports[i] = classify_series(users[i].series, config.pipeline);
    });

    CalibrationReport out;
    out.n_per_condition = config.n_per_condition;
    std::array<std::size_t, 3> eligible{};
    for (std::size_t i = 0; i < users.size(); ++i)
        if (reports[i]) ++eligible[kind_of[i]];
    out.eligible_monotonic = eligible[0];
    out.eligible_flat = eligible[1];
    out.eligible_inverted_u = eligible[2];

    for (const auto& variant : config.variants) {
        std::array<std::size_t, 3> hits{};
        for (std::size_t i = 0; i < users.size(); ++i)
            if (reports[i] && passes(*reports[i], variant)) ++hits[kind_of[i]];
        auto rate = [&](std::size_t k) {
            return eligible[k] ? static_cast<double>(hits[k]) / static_cast<double>(eligible[k]) : 0.0;
        };
        CalibrationRow row;
        row.variant = variant.name;
        row.fp_monotonic = rate(0);
        row.fp_flat = rate(1);
        row.tp_inverted_u = rate(2);
        row.selectivity = row.fp_monotonic > 0.0 ? row.tp_inverted_u / row.fp_monotonic : 0.0;
        if (config.observed_rate) {
            row.excess = *config.observed_rate - row.fp_monotonic;
            row.prevalence = prevalence_bounds(*config.observed_rate, row.fp_monotonic, row.tp_inverted_u);
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

}  // namespace peakshift
