#include <doctest.h>

#include <cmath>

#include "peakshift/calibration.hpp"
#include "peakshift/classify.hpp"
#include "peakshift/error.hpp"
#include "peakshift/synth.hpp"

using namespace peakshift;

namespace {

ModelParams default_params(ModelKind k) {
    switch (k) {
        case ModelKind::HillExponential: return ModelParams(k, {0.2, 0.3, 2, 8, 30});
        case ModelKind::MonotonicDecay: return ModelParams(k, {0.2, 0.3, 30});
        case ModelKind::Flat: return ModelParams(k, {0.2});
        case ModelKind::PureHill: return ModelParams(k, {0.2, 0.3, 2, 8});
        case ModelKind::GaussianPeak: return ModelParams(k, {0.2, 0.3, 10, 5});
        case ModelKind::LogarithmicPeak: return ModelParams(k, {0.2, 0.3, 10});
        case ModelKind::QuadraticPeak: return ModelParams(k, {0.2, 0.01, -0.001});
    }
    throw std::logic_error("kind");
}

// Hand-built fit table: each family gets (sse, aic); r2 derives from a shared tss.
struct Table {
    double hill_sse = 0.1, mono_sse = 1.0, quad_aic = 100, flat_r2 = 0.0;
    std::optional<ModelKind> best;
    bool converged = true;
    double tss = 2.0;
    std::size_t n = 60;

    ModelFits build() const {
        std::vector<FitResult> out;
        for (ModelKind k : kAllModels) {
            FitResult f{.kind = k, .params = default_params(k), .peak = {}};
            f.n_obs = n;
            f.tss = tss;
            f.converged = k == ModelKind::HillExponential ? converged : true;
            f.sse = k == ModelKind::HillExponential ? hill_sse
                    : k == ModelKind::MonotonicDecay ? mono_sse
                                                     : tss * (1 - flat_r2);
            f.r2 = 1 - f.sse / tss;
            f.aic = k == ModelKind::HillExponential ? 0.0
                    : k == ModelKind::QuadraticPeak ? quad_aic
                    : k == ModelKind::MonotonicDecay ? 50.0
                                                     : 200.0;
            if (best && k == *best) f.aic = -100.0;
            out.push_back(f);
        }
        return ModelFits(std::move(out));
    }
};

AggregateDiagnostics good_diag() { return {0.5, 0.01, 0.01, 0.5}; }

}  // namespace

TEST_CASE("aggregate ladder") {
    Table t;
    CHECK(classify_aggregate(t.build(), good_diag()).label == AggregateLabel::StrongA);

    auto d = good_diag();
    d.ascent_p = 0.3;
    CHECK(classify_aggregate(t.build(), d).label == AggregateLabel::ModerateB);
    d.permutation_p = 0.4;
    // both soft gates fail: falls through to the AIC winner
    CHECK(classify_aggregate(t.build(), d).label == AggregateLabel::WeakC);

    d = good_diag();
    d.oos_r2 = -0.2;
    CHECK(classify_aggregate(t.build(), d).label == AggregateLabel::WeakC);
    d.decline = 0.05;
    CHECK(classify_aggregate(t.build(), d).label == AggregateLabel::NoFitE);

    Table mono = t;
    mono.best = ModelKind::MonotonicDecay;
    mono.hill_sse = 0.99;
    CHECK(classify_aggregate(mono.build(), good_diag()).label == AggregateLabel::MonotonicD);
    mono.best = ModelKind::PureHill;
    CHECK(classify_aggregate(mono.build(), good_diag()).label == AggregateLabel::MonotonicD);

    Table bad = t;
    bad.converged = false;
    CHECK(classify_aggregate(bad.build(), good_diag()).label == AggregateLabel::NoFitE);
    bad = t;
    bad.hill_sse = bad.mono_sse = 1.95;
    bad.flat_r2 = 0.01;
    CHECK(classify_aggregate(bad.build(), good_diag()).label == AggregateLabel::NoFitE);
}

TEST_CASE("A requires all eight gates") {
    const Table t;
    const auto c = classify_aggregate(t.build(), good_diag());
    REQUIRE(c.gates.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(c.gates[i].name == kAggregateGates[i]);
        CHECK(c.gates[i].passed);
    }
    Table q = t;
    q.quad_aic = -1;
    CHECK(classify_aggregate(q.build(), good_diag()).label != AggregateLabel::StrongA);
    Table r = t;
    r.hill_sse = 1.5;  // r2 0.25
    CHECK(classify_aggregate(r.build(), good_diag()).label != AggregateLabel::StrongA);
}

TEST_CASE("validation scenarios") {
    AggregatePipeline p;
    p.fit.n_starts = 8;
    auto label = [&](AggregateScenario s) { return assess_aggregate(scenario_curve(s, 42), p).classification.label; };
    CHECK(label(AggregateScenario::StrongInvertedU) == AggregateLabel::StrongA);
    CHECK(label(AggregateScenario::Mixed) == AggregateLabel::WeakC);
    const auto flat = label(AggregateScenario::Flat);
    CHECK(flat != AggregateLabel::StrongA);
    CHECK(flat != AggregateLabel::ModerateB);
}

TEST_CASE("lazy permutation matches the eager label") {
    AggregatePipeline lazy, eager;
    lazy.fit.n_starts = eager.fit.n_starts = 6;
    lazy.permutation.B = eager.permutation.B = 100;
    eager.lazy_permutation = false;
    for (auto s : {AggregateScenario::Monotonic, AggregateScenario::WeakInvertedU}) {
        const auto curve = scenario_curve(s, 7);
        const auto a = assess_aggregate(curve, lazy), b = assess_aggregate(curve, eager);
        CHECK(a.classification.label == b.classification.label);
        CHECK(b.diagnostics.permutation_p);
    }
}

TEST_CASE("strict gates on a noiseless inverted-U user") {
    const auto p = HillExpParams::make(0.2, 0.3, 2, 8, 30);
    SmoothedSeries s{"u", "g", {}};
    for (int n = 1; n <= 60; ++n) s.values.push_back(evaluate(p, n));
    FitConfig cfg;
    cfg.peak_domain = PeakDomain{1.0, 60.0};
    const auto fits = fit_families(to_points(s.values), kStrictFamilies, cfg);
    const auto r = classify_user_strict(fits, s);
    CHECK(r.passed);
    CHECK(r.failure.empty());
    REQUIRE(r.n_star);
    CHECK(*r.n_star > 2.0);
    CHECK(r.lrt_p < 0.05);
    CHECK(r.hillexp_bic < r.purehill_bic);
    CHECK(passes(r, strict_variant()));
    CHECK(passes(r, original_variant()));
}

TEST_CASE("constant user fails") {
    ExposureSeries s{"u", "g", std::vector<std::uint8_t>(40, 1), std::vector<double>(40, 5.0)};
    const auto r = classify_series(s, UserPipeline{});
    REQUIRE(r);
    CHECK(!r->passed);
    CHECK(r->r2 <= 0.0 + 1e-12);
    CHECK(r->decline == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("length gates") {
    ExposureSeries s{"u", "g", std::vector<std::uint8_t>(18, 1), std::vector<double>(18, 5.0)};
    CHECK(!classify_series(s, UserPipeline{}));
    s.engagement.assign(19, 1);
    s.raw_ratings.assign(19, 5.0);
    CHECK(classify_series(s, UserPipeline{}));
}

TEST_CASE("passes() is the gate conjunction") {
    StrictGateReport r;
    r.lrt_p = 0.01;
    r.delta_aic = 3;
    r.r2 = 0.2;
    r.n_star = 5;
    r.interior = true;
    r.decline = 0.12;
    r.hillexp_bic = 1;
    r.purehill_bic = 2;
    CHECK(passes(r, strict_variant()));
    CHECK(!passes(r, strict_variant(0.15)));
    CHECK(passes(r, no_decline_variant()));
    auto x = r;
    x.n_star = 2.0;
    CHECK(!passes(x, strict_variant()));
    x = r;
    x.interior = false;
    CHECK(!passes(x, original_variant()));
    x = r;
    x.hillexp_bic = 3;
    CHECK(!passes(x, strict_variant()));
    CHECK(passes(x, original_variant()));
    x = r;
    x.delta_aic = 2.0;
    CHECK(!passes(x, original_variant()));
    x = r;
    x.r2 = 0.05;
    CHECK(!passes(x, original_variant()));
    CHECK(strict_variant(0.15).name == "strict_15");
}

TEST_CASE("monotonic nulls mostly fail the strict classifier") {
    const auto users = generate_null_users(NullUserKind::Monotonic, 500, LengthSource{}, 42);
    UserPipeline p;
    p.fit.n_starts = 8;
    std::size_t eligible = 0, failed = 0;
    for (const auto& u : users) {
        const auto r = classify_series(u.series, p);
        if (!r) continue;
        ++eligible;
        failed += !r->passed;
    }
    CHECK(double(failed) / double(eligible) >= 0.70);
}

TEST_CASE("prevalence bounds") {
    auto e = prevalence_bounds(0.282, 0.240, 0.356);
    REQUIRE(e.point);
    CHECK(*e.point == doctest::Approx(0.042 / 0.116));
    CHECK(e.conditioning_warning);
    CHECK(e.low == doctest::Approx(0.042));
    CHECK(e.high == doctest::Approx(0.282));

    e = prevalence_bounds(0.3, 0.0, 1.0);
    CHECK(*e.point == doctest::Approx(0.3));
    CHECK(!e.conditioning_warning);

    e = prevalence_bounds(0.24, 0.24, 0.5);
    CHECK(e.low == 0.0);

    e = prevalence_bounds(0.3, 0.4, 0.35);
    CHECK(!e.point);
    CHECK(e.low <= e.high);
    CHECK_THROWS(prevalence_bounds(1.2, 0.1, 0.5));
}

TEST_CASE("calibration report") {
    SncConfig c;
    c.n_per_condition = 100;
    c.pipeline.fit.n_starts = 6;
    c.observed_rate = 0.3;
    c.variants = {strict_variant(), no_decline_variant(), original_variant()};
    const auto r = snc_calibrate(c);
    REQUIRE(r.rows.size() == 3);
    for (const auto& row : r.rows) {
        for (double v : {row.fp_monotonic, row.fp_flat, row.tp_inverted_u}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        CHECK(row.selectivity >= 0.0);
        REQUIRE(row.excess);
        CHECK(*row.excess == doctest::Approx(0.3 - row.fp_monotonic));
        REQUIRE(row.prevalence);
        CHECK(row.prevalence->low <= row.prevalence->high);
    }
    // more gates never pass more users
    CHECK(r.rows[0].fp_monotonic <= r.rows[1].fp_monotonic);
    CHECK(r.rows[1].fp_monotonic <= r.rows[2].fp_monotonic);
    CHECK(r.rows[0].tp_inverted_u <= r.rows[2].tp_inverted_u);

    const auto again = snc_calibrate(c, 2);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(again.rows[i].fp_monotonic == r.rows[i].fp_monotonic);
        CHECK(again.rows[i].tp_inverted_u == r.rows[i].tp_inverted_u);
    }

    auto bad = c;
    bad.generator.smoothing_window = 3;
    CHECK_THROWS_AS(snc_calibrate(bad), ConfigError);
    bad = c;
    bad.n_per_condition = 99;
    CHECK_THROWS_AS(snc_calibrate(bad), ConfigError);
}
