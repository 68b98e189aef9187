#include "peakshift/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "peakshift/error.hpp"

namespace peakshift {

std::string_view to_string(AggregateLabel label) noexcept {
    switch (label) {
        case AggregateLabel::StrongA: return "A_strong";
        case AggregateLabel::ModerateB: return "B_moderate";
        case AggregateLabel::WeakC: return "C_weak";
        case AggregateLabel::MonotonicD: return "D_monotonic";
        case AggregateLabel::NoFitE: return "E_no_fit";
    }
    return "E_no_fit";
}

namespace {

enum GateIndex { kR2, kLrt, kDeltaAic, kQuad, kPerm, kOos, kDecline, kAscent };

bool peaked_family(ModelKind k) {
    return k == ModelKind::HillExponential || k == ModelKind::GaussianPeak ||
           k == ModelKind::LogarithmicPeak || k == ModelKind::QuadraticPeak;
}

std::vector<GateOutcome> aggregate_gates(const ModelFits& fits, const AggregateDiagnostics& d) {
    const auto& hill = fits.at(ModelKind::HillExponential);
    const auto& mono = fits.at(ModelKind::MonotonicDecay);
    const auto& quad = fits.at(ModelKind::QuadraticPeak);
    const double lrt_p = compare_lrt(hill, mono).p_value;

    std::vector<GateOutcome> g(kAggregateGates.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i].name = std::string(kAggregateGates[i]);
    g[kR2] = {g[kR2].name, hill.r2, 0.4, true, hill.r2 > 0.4};
    g[kLrt] = {g[kLrt].name, lrt_p, 0.05, true, lrt_p < 0.05};
    g[kDeltaAic] = {g[kDeltaAic].name, mono.aic - hill.aic, 4.0, true, mono.aic - hill.aic > 4.0};
    g[kQuad] = {g[kQuad].name, quad.aic - hill.aic, 0.0, true, hill.aic < quad.aic};
    if (d.permutation_p)
        g[kPerm] = {g[kPerm].name, *d.permutation_p, 0.05, true, *d.permutation_p < 0.05};
    else
        g[kPerm] = {g[kPerm].name, std::numeric_limits<double>::quiet_NaN(), 0.05, false, false};
    g[kOos] = {g[kOos].name, d.oos_r2, 0.0, true, d.oos_r2 > 0.0};
    g[kDecline] = {g[kDecline].name, d.decline, 0.10, true, d.decline > 0.10};
    g[kAscent] = {g[kAscent].name, d.ascent_p, 0.05, true, d.ascent_p < 0.05};
    return g;
}

bool core_gates_pass(const std::vector<GateOutcome>& g) {
    for (int i : {kR2, kLrt, kDeltaAic, kQuad, kOos, kDecline})
        if (!g[i].passed) return false;
    return true;
}

bool no_fit(const ModelFits& fits) {
    if (!fits.at(ModelKind::HillExponential).converged) return true;
    return std::all_of(fits.all().begin(), fits.all().end(),
                       [](const FitResult& f) { return f.r2 < 0.1; });
}

}  // namespace

AggregateClass classify_aggregate(const ModelFits& fits, const AggregateDiagnostics& diag) {
    AggregateClass out;
    out.gates = aggregate_gates(fits, diag);
    out.best_by_aic = fits.best_by_aic();
    const auto& g = out.gates;

    if (no_fit(fits)) {
        out.label = AggregateLabel::NoFitE;
        return out;
    }
    if (core_gates_pass(g)) {
        const int soft_failures = int(!g[kAscent].passed) + int(!g[kPerm].passed);
        if (soft_failures == 0) {
            out.label = AggregateLabel::StrongA;
            return out;
        }
        if (soft_failures == 1) {
            out.label = AggregateLabel::ModerateB;
            return out;
        }
    }
    if (out.best_by_aic == ModelKind::MonotonicDecay || out.best_by_aic == ModelKind::PureHill) {
        out.label = AggregateLabel::MonotonicD;
    } else if (peaked_family(out.best_by_aic) && diag.decline > 0.10) {
        out.label = AggregateLabel::WeakC;
    } else {
        out.label = AggregateLabel::NoFitE;
    }
    return out;
}

namespace {

template <class PermutationFn>
AggregateAssessment assess(const BinnedCurve& curve, const AggregatePipeline& pipeline,
                           PermutationFn&& permutation_p) {
    if (curve.bins.empty()) throw DataError("empty aggregate curve");
    const auto pts = to_points(curve, pipeline.weight_by_count);
    FitConfig cfg = pipeline.fit;
    const double first = curve.bins.front().exposure, last = curve.bins.back().exposure;
    if (!cfg.peak_domain) cfg.peak_domain = PeakDomain{first, last};

    ModelFits fits = fit_all(pts, cfg);
    const auto& hill = fits.at(ModelKind::HillExponential);

    AggregateDiagnostics diag;
    if (hill.peak.n_star) {
        const double n_star = *hill.peak.n_star;
        if (last > n_star) diag.decline = decline_fraction(hill.params, n_star, last);
        diag.ascent_p = ascent_significance(curve, n_star).p_value;
    }
    try {
        diag.oos_r2 = oos_r2(pts, ModelKind::HillExponential, cfg);
    } catch (const DataError&) {
        diag.oos_r2 = -std::numeric_limits<double>::infinity();
    }

    AggregateClass cls = classify_aggregate(fits, diag);
    const bool needed = cls.label != AggregateLabel::NoFitE && core_gates_pass(cls.gates);
    if (needed || !pipeline.lazy_permutation) {
        diag.permutation_p = permutation_p(cfg);
        cls = classify_aggregate(fits, diag);
    }
    std::optional<LrtResult> lrt = compare_lrt(hill, fits.at(ModelKind::MonotonicDecay));
    return AggregateAssessment{std::move(fits), diag, std::move(cls), lrt};
}

}  // namespace

AggregateAssessment assess_aggregate(const BinnedCurve& curve, const AggregatePipeline& pipeline,
                                     unsigned jobs) {
    return assess(curve, pipeline, [&](const FitConfig& cfg) {
        return permutation_fit_test(curve, cfg, pipeline.permutation, pipeline.weight_by_count, jobs)
            .p_value;
    });
}

AggregateAssessment assess_aggregate(std::span<const ExposureSeries> series,
                                     const AggregateFitOptions& aggregate,
                                     const AggregatePipeline& pipeline, unsigned jobs) {
    const BinnedCurve curve = aggregate_curve(series, aggregate.max_exposure, aggregate.min_bin_count);
    AggregatePipeline p = pipeline;
    p.weight_by_count = aggregate.weight_by_count;
    return assess(curve, p, [&](const FitConfig& cfg) {
        return permutation_fit_test(series, aggregate, cfg, pipeline.permutation, jobs).p_value;
    });
}

StrictVariant strict_variant() { return {}; }
StrictVariant no_decline_variant() { return {"no_decline", false, 0.10, true}; }
StrictVariant original_variant() { return {"original", false, 0.10, false}; }
StrictVariant strict_variant(double decline_threshold) {
    const int pct = static_cast<int>(std::lround(decline_threshold * 100.0));
    return {"strict_" + std::to_string(pct), true, decline_threshold, true};
}

bool passes(const StrictGateReport& r, const StrictVariant& v) {
    if (!r.failure.empty() && r.failure.rfind("fit:", 0) == 0) return false;
    return r.lrt_p < 0.05 && r.delta_aic > 2.0 && r.r2 > 0.05 && r.n_star && *r.n_star > 2.0 &&
           r.interior && (!v.decline_gate || r.decline > v.decline_threshold) &&
           (!v.pure_hill_gate || r.hillexp_bic < r.purehill_bic);
}

StrictGateReport classify_user_strict(const ModelFits& fits, const SmoothedSeries& smoothed,
                                      const StrictVariant& variant) {
    const auto& hill = fits.at(ModelKind::HillExponential);
    const auto& mono = fits.at(ModelKind::MonotonicDecay);
    const auto& pure = fits.at(ModelKind::PureHill);
    const double L = static_cast<double>(smoothed.values.size());

    StrictGateReport r;
    r.lrt_p = compare_lrt(hill, mono).p_value;
    r.delta_aic = mono.aic - hill.aic;
    r.r2 = hill.r2;
    const PeakLocation peak = L > 1.0 ? peak_location(hill.params, {1.0, L}) : PeakLocation{};
    r.n_star = peak.n_star;
    r.interior = peak.interior;
    if (r.n_star && L > *r.n_star) r.decline = decline_fraction(hill.params, *r.n_star, L);
    r.hillexp_bic = hill.bic;
    r.purehill_bic = pure.bic;
    r.passed = passes(r, variant);

    if (!r.passed) {
        if (!(r.lrt_p < 0.05)) r.failure = "lrt_p";
        else if (!(r.delta_aic > 2.0)) r.failure = "delta_aic";
        else if (!(r.r2 > 0.05)) r.failure = "r2";
        else if (!(r.n_star && *r.n_star > 2.0 && r.interior)) r.failure = "peak";
        else if (variant.decline_gate && !(r.decline > variant.decline_threshold)) r.failure = "decline";
        else r.failure = "bic_vs_pure_hill";
    }
    return r;
}

std::optional<StrictGateReport> classify_series(const ExposureSeries& series,
                                                const UserPipeline& pipeline,
                                                const StrictVariant& variant) {
    if (series.length() < pipeline.min_raw_length) return std::nullopt;
    const SmoothedSeries smoothed = smooth_series(series, pipeline.smoothing_window);
    if (smoothed.values.size() < pipeline.min_smoothed_length) return std::nullopt;

    FitConfig cfg = pipeline.fit;
    cfg.peak_domain = PeakDomain{1.0, static_cast<double>(smoothed.values.size())};
    try {
        const auto pts = to_points(smoothed.values);
        const ModelFits fits = fit_families(pts, kStrictFamilies, cfg);
        return classify_user_strict(fits, smoothed, variant);
    } catch (const std::exception& e) {
        StrictGateReport r;
        r.failure = std::string("fit: ") + e.what();
        return r;
    }
}

PrevalenceEstimate prevalence_bounds(double observed_rate, double fpr, double tpr) {
    for (double v : {observed_rate, fpr, tpr})
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("rates must lie in [0, 1]");
    PrevalenceEstimate p;
    if (tpr > fpr) p.point = (observed_rate - fpr) / (tpr - fpr);
    p.low = std::max(0.0, observed_rate - fpr);
    p.high = observed_rate;
    p.conditioning_warning = tpr - fpr < 0.2;
    return p;
}

}  // namespace peakshift
