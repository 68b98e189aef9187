#pragma once

// Aggregate class ladder (A-E) and the strict per-user gate classifier.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "peakshift/engagement.hpp"
#include "peakshift/fit.hpp"

namespace peakshift {

enum class AggregateLabel { StrongA, ModerateB, WeakC, MonotonicD, NoFitE };
std::string_view to_string(AggregateLabel label) noexcept;  // "A_strong", ...

struct GateOutcome {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool evaluated = true;  // false when skipped because it cannot change the label
    bool passed = false;
};

struct AggregateDiagnostics {
    double oos_r2 = 0.0;
    double ascent_p = 1.0;
    std::optional<double> permutation_p;  // empty: not evaluated
    double decline = 0.0;
};

struct AggregateClass {
    AggregateLabel label = AggregateLabel::NoFitE;
    std::vector<GateOutcome> gates;  // the eight A gates in fixed order
    ModelKind best_by_aic = ModelKind::Flat;
};

// Gate names in report order.
inline constexpr std::array<std::string_view, 8> kAggregateGates = {
    "r2", "lrt_p", "delta_aic", "aic_vs_quadratic", "permutation_p", "oos_r2", "decline", "ascent_p"};

// Ladder: E when HillExp did not converge or every family has R^2 < 0.1;
// A when all eight gates pass; B when only ascent and/or permutation fail (at
// most one); D when MonotonicDecay or PureHill wins AIC; C when HillExp's
// decline exceeds 10% and HillExp or another peaked family wins AIC; else E.
AggregateClass classify_aggregate(const ModelFits& fits, const AggregateDiagnostics& diag);

struct AggregatePipeline {
    FitConfig fit;
    PermutationOptions permutation;
    bool weight_by_count = true;
    // Skip the permutation test when no outcome of it can move the label.
    bool lazy_permutation = true;
};

struct AggregateAssessment {
    ModelFits fits;
    AggregateDiagnostics diagnostics;
    AggregateClass classification;
    std::optional<LrtResult> lrt;
};

// Fits all families to the binned curve, computes the diagnostics and
// classifies. The permutation null shuffles bins across exposure positions.
AggregateAssessment assess_aggregate(const BinnedCurve& curve, const AggregatePipeline& pipeline,
                                     unsigned jobs = 1);
// Same, with the within-user permutation null computed from the series.
AggregateAssessment assess_aggregate(std::span<const ExposureSeries> series,
                                     const AggregateFitOptions& aggregate,
                                     const AggregatePipeline& pipeline, unsigned jobs = 1);

struct StrictVariant {
    std::string name = "strict";
    bool decline_gate = true;
    double decline_threshold = 0.10;
    bool pure_hill_gate = true;
};

StrictVariant strict_variant();
StrictVariant no_decline_variant();
StrictVariant original_variant();  // no decline and no pure-Hill gate
StrictVariant strict_variant(double decline_threshold);

struct StrictGateReport {
    double lrt_p = 1.0;
    double delta_aic = 0.0;  // AIC_monotonic - AIC_hillexp
    double r2 = 0.0;
    std::optional<double> n_star;
    bool interior = false;
    double decline = 0.0;
    double hillexp_bic = 0.0;
    double purehill_bic = 0.0;
    bool passed = false;
    std::string failure;  // first failing gate or fit error
};

// Families needed by the strict gates.
inline constexpr std::array<ModelKind, 3> kStrictFamilies = {
    ModelKind::HillExponential, ModelKind::MonotonicDecay, ModelKind::PureHill};

// Evaluates every gate on fits of the smoothed series (exposures 1..L).
StrictGateReport classify_user_strict(const ModelFits& fits, const SmoothedSeries& smoothed,
                                      const StrictVariant& variant = strict_variant());
// Re-applies a variant's thresholds to an existing report.
bool passes(const StrictGateReport& report, const StrictVariant& variant);

struct UserPipeline {
    int smoothing_window = 5;
    std::size_t min_raw_length = 15;
    std::size_t min_smoothed_length = 19;
    FitConfig fit;
};

// Smooths, fits the strict families and classifies one series. Returns
// nullopt when the series is shorter than the length gates.
std::optional<StrictGateReport> classify_series(const ExposureSeries& series,
                                                const UserPipeline& pipeline,
                                                const StrictVariant& variant = strict_variant());

struct PrevalenceEstimate {
    std::optional<double> point;  // empty when tpr <= fpr
    double low = 0.0;
    double high = 0.0;
    bool conditioning_warning = false;
};

PrevalenceEstimate prevalence_bounds(double observed_rate, double fpr, double tpr);

}  // namespace peakshift
