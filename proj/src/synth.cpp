#include "peakshift/synth.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>

#include "peakshift/error.hpp"
#include "peakshift/parallel.hpp"
#include "peakshift/rng.hpp"
#include "peakshift/stats.hpp"

namespace peakshift {

std::optional<double> half_max_for_peak(double onset, double decay, double n_star) {
    if (!(onset > 0.0 && decay > 0.0 && n_star > 0.0)) return std::nullopt;
    const double denom = onset * decay - n_star;
    if (!(denom > 0.0)) return std::nullopt;
    return std::exp(((onset + 1.0) * std::log(n_star) - std::log(denom)) / onset);
}

void FactorialConfig::validate() const {
    if (n_users < 10) throw ConfigError("n_users must be >= 10");
    if (!(peak_median > 0.0) || !(peak_log_sd >= 0.0)) throw ConfigError("invalid peak distribution");
    if (!(baseline >= 0.0 && baseline < 1.0)) throw ConfigError("baseline must be in [0, 1)");
    if (!(onset > 0.0)) throw ConfigError("onset must be positive");
    if (unbiased_length < 1) throw ConfigError("unbiased_length must be >= 1");
    if (!(decay.lo > 0.0 && decay.hi >= decay.lo)) throw ConfigError("invalid decay law");
    if (!(survival.gamma > 0.0) || !(survival.elasticity >= 0.0) || !(survival.eta_sd >= 0.0) ||
        survival.floor < 1)
        throw ConfigError("invalid survival law");
    if (!(amplitude.lo >= 0.0 && amplitude.hi >= amplitude.lo && baseline + amplitude.hi <= 1.0))
        throw ConfigError("invalid amplitude law");
}

namespace {

constexpr int kMaxResamples = 1000;

struct Draw {
    HillExpParams shape;  // amplitude filled in later
    double peak = 0.0;
    std::size_t resamples = 0;
};

// Peak and shape share one stream so every factorial cell sees the same users.
Draw draw_user_shape(const FactorialConfig& c, std::size_t u, const FitBounds& bounds) {
    Engine eng = make_engine(c.seed, "user-shape", u);
    std::lognormal_distribution<double> peak_dist(std::log(c.peak_median), c.peak_log_sd);
    for (int attempt = 0; attempt < kMaxResamples; ++attempt) {
        const double n_star = peak_dist(eng);
        const double s = c.decay.mode == DecayLaw::Mode::Absolute
                             ? uniform(eng, c.decay.lo, c.decay.hi)
                             : n_star * uniform(eng, c.decay.lo, c.decay.hi);
        const auto b = half_max_for_peak(c.onset, s, n_star);
        if (!b || *b < bounds.half_max.lo || *b > bounds.half_max.hi || s < bounds.decay.lo ||
            s > bounds.decay.hi)
            continue;
        HillExpParams p{c.baseline, 0.0, c.onset, *b, s};
        return {p, n_star, static_cast<std::size_t>(attempt)};
    }
    throw DataError("peak target unreachable after repeated resampling");
}

// The drawn peak, checked against a direct search of the realized curve.
void verify_peak(const HillExpParams& p, double n_star) {
    HillExpParams probe = p;
    probe.A = 1.0;
    const PeakLocation loc = peak_location(ModelParams(probe),
                                           {std::max(1e-3, n_star / 4.0), n_star * 4.0}, n_star * 1e-3);
    if (!loc.n_star || std::abs(*loc.n_star - n_star) > 1e-3 * n_star)
        throw std::logic_error("peak targeting mismatch");
}

}  // namespace

Population generate_population(const FactorialConfig& c, unsigned jobs) {
    c.validate();
    const FitBounds bounds;
    std::vector<Draw> draws(c.n_users);
    parallel_for(c.n_users, jobs, [&](std::size_t u) {
        draws[u] = draw_user_shape(c, u, bounds);
        verify_peak(draws[u].shape, draws[u].peak);
    });
    double max_peak = 0.0;
    for (const auto& d : draws) max_peak = std::max(max_peak, d.peak);

    Population pop;
    pop.users.resize(c.n_users);
    parallel_for(c.n_users, jobs, [&](std::size_t u) {
        SyntheticUser& user = pop.users[u];
        user.user_id = "u" + std::to_string(u + 1);
        user.params = draws[u].shape;
        user.true_peak = draws[u].peak;

        if (c.amplitude_correlation) {
            Engine eng = make_engine(c.seed, "amplitude", u);
            const double eps = normal(eng, 0.0, c.amplitude.noise_sd);
            user.params.A = std::clamp(
                c.amplitude.intercept + c.amplitude.slope * user.true_peak / max_peak + eps,
                c.amplitude.lo, c.amplitude.hi);
        } else {
            user.params.A = c.amplitude.constant;
        }

        if (c.survival_bias) {
            Engine eng = make_engine(c.seed, "survival", u);
            const double eta = normal(eng, 0.0, c.survival.eta_sd);
            const double m = c.peak_median;
            const double raw = std::round(c.survival.gamma * m *
                                          std::pow(user.true_peak / m, c.survival.elasticity) *
                                          std::exp(eta));
            user.n_max = std::max(c.survival.floor, static_cast<int>(std::min(raw, 1e6)));
        } else {
            user.n_max = c.unbiased_length;
        }

        Engine eng = make_engine(c.seed, "engagement", u);
        user.engagement.resize(static_cast<std::size_t>(user.n_max));
        for (int n = 1; n <= user.n_max; ++n)
            user.engagement[n - 1] = bernoulli(eng, evaluate(user.params, n)) ? 1 : 0;
    });
    for (const auto& d : draws) pop.resamples += d.resamples;
    return pop;
}

std::vector<ExposureSeries> to_series(const Population& population, const std::string& group) {
    std::vector<ExposureSeries> out;
    out.reserve(population.users.size());
    for (const auto& u : population.users) {
        ExposureSeries s{u.user_id, group, u.engagement, {}};
        s.raw_ratings.reserve(u.engagement.size());
        for (auto e : u.engagement) s.raw_ratings.push_back(e ? 5.0 : 2.0);
        out.push_back(std::move(s));
    }
    return out;
}

void write_population_events(std::ostream& out, const Population& population,
                             const std::string& group) {
    std::vector<InteractionEvent> events;
    for (const auto& u : population.users)
        for (std::size_t i = 0; i < u.engagement.size(); ++i)
            events.push_back({u.user_id, "item_" + std::to_string(i + 1), group,
                              u.engagement[i] ? 5.0 : 2.0, static_cast<std::int64_t>(i + 1), 0});
    write_events_csv(out, events);
}

void write_true_peaks(std::ostream& out, const Population& population) {
    out << "user_id,true_peak,n_max\n";
    out.precision(17);
    for (const auto& u : population.users) out << u.user_id << ',' << u.true_peak << ',' << u.n_max << '\n';
}

std::vector<FactorialCell> run_factorial(const FactorialConfig& base,
                                         const FactorialPipeline& pipeline, unsigned jobs) {
    base.validate();
    std::vector<FactorialCell> cells;
    for (bool survival : {true, false}) {
        for (bool amplitude : {true, false}) {
            FactorialCell cell;
            cell.survival_bias = survival;
            cell.amplitude_correlation = amplitude;
            FactorialConfig cfg = base;
            cfg.survival_bias = survival;
            cfg.amplitude_correlation = amplitude;
            try {
                const Population pop = generate_population(cfg, jobs);
                const auto series = to_series(pop);

                std::vector<double> peaks;
                if (pipeline.mode == PeakMode::GroundTruth) {
                    for (const auto& u : pop.users) peaks.push_back(u.true_peak);
                } else {
                    FitConfig fc = pipeline.fit;
                    fc.n_starts = pipeline.fitted_starts;
                    std::vector<std::optional<double>> fitted(series.size());
                    parallel_for(series.size(), jobs, [&](std::size_t i) {
                        const auto sm = smooth_series(series[i], pipeline.smoothing_window);
                        if (sm.values.size() < 7) return;
                        FitConfig local = fc;
                        local.peak_domain = PeakDomain{1.0, double(sm.values.size())};
                        try {
                            const auto f = fit(to_points(sm.values), ModelKind::HillExponential, local);
                            if (f.peak.has_interior_peak()) fitted[i] = *f.peak.n_star;
                        } catch (const DataError&) {
                        }
                    });
                    for (const auto& f : fitted)
                        if (f) peaks.push_back(*f);
                }
                if (peaks.empty()) throw DataError("no individual peaks");
                cell.individual_median = stats::median(peaks);
                cell.individual_count = peaks.size();

                const BinnedCurve curve = aggregate_curve(series, pipeline.aggregate.max_exposure,
                                                          pipeline.aggregate.min_bin_count);
                FitConfig fc = pipeline.fit;
                fc.peak_domain = PeakDomain{double(curve.bins.front().exposure),
                                            double(curve.bins.back().exposure)};
                const FitResult agg = fit(to_points(curve, pipeline.aggregate.weight_by_count),
                                          ModelKind::HillExponential, fc);
                if (!agg.peak.n_star) throw FitError("aggregate fit has no peak");
                cell.aggregate_peak = *agg.peak.n_star;
                cell.aggregate_interior = agg.peak.interior;
                cell.distortion = cell.aggregate_peak / cell.individual_median;
            } catch (const std::exception& e) {
                cell.failed = true;
                cell.message = e.what();
            }
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

std::string_view to_string(NullUserKind kind) noexcept {
    switch (kind) {
        case NullUserKind::Monotonic: return "monotonic";
        case NullUserKind::Flat: return "flat";
        case NullUserKind::TrueInvertedU: return "inverted_u";
    }
    return "monotonic";
}

std::vector<NullUser> generate_null_users(NullUserKind kind, std::size_t n,
                                          const LengthSource& lengths, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("need at least one null user");
    if (lengths.empirical.empty() && !(lengths.uniform_lo >= 1 && lengths.uniform_hi >= lengths.uniform_lo))
        throw ConfigError("invalid uniform length range");
    for (int len : lengths.empirical)
        if (len < 1) throw ConfigError("empirical lengths must be positive");

    const std::string stream = "null-" + std::string(to_string(kind));
    std::vector<NullUser> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Engine eng = make_engine(seed, stream, i);
        std::vector<double> v;
        switch (kind) {
            case NullUserKind::Monotonic:
                v = {uniform(eng, 0.2, 0.5), uniform(eng, 0.1, 0.3), uniform(eng, 10.0, 50.0)};
                break;
            case NullUserKind::Flat: v = {uniform(eng, 0.3, 0.7)}; break;
            case NullUserKind::TrueInvertedU:
                v = {uniform(eng, 0.1, 0.3), uniform(eng, 0.15, 0.4), uniform(eng, 1.0, 3.0),
                     uniform(eng, 3.0, 15.0), uniform(eng, 15.0, 60.0)};
                break;
        }
        const ModelKind mk = kind == NullUserKind::Monotonic ? ModelKind::MonotonicDecay
                             : kind == NullUserKind::Flat    ? ModelKind::Flat
                                                             : ModelKind::HillExponential;
        ModelParams truth(mk, std::move(v));

        int len;
        if (lengths.empirical.empty()) {
            len = std::uniform_int_distribution<int>(lengths.uniform_lo, lengths.uniform_hi)(eng);
        } else {
            len = lengths.empirical[std::uniform_int_distribution<std::size_t>(
                0, lengths.empirical.size() - 1)(eng)];
        }

        char id[32];
        std::snprintf(id, sizeof id, "%s_%05zu", std::string(to_string(kind)).c_str(), i + 1);
        ExposureSeries s{id, "null", {}, {}};
        for (int k = 1; k <= len; ++k) {
            const double p = evaluate(truth, k);
            if (!(p >= 0.0 && p <= 1.0)) throw std::logic_error("null prior produced p outside [0, 1]");
            const bool e = bernoulli(eng, p);
            s.engagement.push_back(e ? 1 : 0);
            s.raw_ratings.push_back(e ? 5.0 : 2.0);
        }
        out.push_back({std::move(s), std::move(truth)});
    }
    return out;
}

double realized_amplitude(const HillExpParams& p, int max_exposure) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int n = 1; n <= max_exposure; ++n) {
        const double v = evaluate(p, n);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi - lo;
}

HillExpParams power_curve(const PowerGrid& grid, double amplitude) {
    HillExpParams unit{grid.baseline, 1.0, grid.onset, grid.half_max, grid.decay};
    const double span = realized_amplitude(unit, grid.max_exposure);
    if (!(span > 0.0)) throw ConfigError("power curve shape has no range");
    return HillExpParams::make(grid.baseline, amplitude / span, grid.onset, grid.half_max, grid.decay);
}

BinnedCurve binomial_curve(const HillExpParams& params, int max_exposure, std::size_t bin_size,
                           Engine& eng, const std::string& group) {
    BinnedCurve c{group, {}};
    for (int n = 1; n <= max_exposure; ++n) {
        std::binomial_distribution<std::size_t> draw(bin_size, evaluate(params, n));
        c.bins.push_back({n, static_cast<double>(draw(eng)) / static_cast<double>(bin_size), bin_size});
    }
    return c;
}

std::vector<PowerCell> power_analysis(const PowerGrid& grid, const AggregatePipeline& pipeline,
                                      std::uint64_t seed, unsigned jobs) {
    if (grid.reps < 10) throw ConfigError("power analysis needs reps >= 10");
    struct Task {
        std::size_t tier, size, rep;
    };
    std::vector<Task> tasks;
    for (std::size_t t = 0; t < grid.tiers.size(); ++t)
        for (std::size_t s = 0; s < grid.bin_sizes.size(); ++s)
            for (std::size_t r = 0; r < grid.reps; ++r) tasks.push_back({t, s, r});

    std::vector<std::uint8_t> detected(tasks.size(), 0);
    parallel_for(tasks.size(), jobs, [&](std::size_t i) {
        const Task& task = tasks[i];
        const HillExpParams p = power_curve(grid, grid.tiers[task.tier].amplitude);
        Engine eng = make_engine(seed, "power", i);
        const BinnedCurve curve = binomial_curve(p, grid.max_exposure, grid.bin_sizes[task.size], eng);
        try {
            const auto a = assess_aggregate(curve, pipeline, 1);
            const auto label = a.classification.label;
            detected[i] = label == AggregateLabel::StrongA || label == AggregateLabel::ModerateB;
        } catch (const std::exception&) {
        }
    });

    std::vector<PowerCell> cells;
    for (std::size_t t = 0; t < grid.tiers.size(); ++t) {
        for (std::size_t s = 0; s < grid.bin_sizes.size(); ++s) {
            PowerCell c{grid.tiers[t].name, grid.tiers[t].amplitude, grid.bin_sizes[s], 0, grid.reps, 0.0};
            for (std::size_t i = 0; i < tasks.size(); ++i)
                if (tasks[i].tier == t && tasks[i].size == s) c.detections += detected[i];
            c.power = static_cast<double>(c.detections) / static_cast<double>(c.reps);
            cells.push_back(c);
        }
    }
    return cells;
}

std::string_view to_string(AggregateScenario s) noexcept {
    switch (s) {
        case AggregateScenario::StrongInvertedU: return "strong_inverted_u";
        case AggregateScenario::WeakInvertedU: return "weak_inverted_u";
        case AggregateScenario::NoisyInvertedU: return "noisy_inverted_u";
        case AggregateScenario::Mixed: return "mixed";
        case AggregateScenario::Monotonic: return "monotonic";
        case AggregateScenario::Flat: return "flat";
    }
    return "flat";
}

BinnedCurve scenario_curve(AggregateScenario scenario, std::uint64_t seed) {
    Engine eng = make_engine(seed, "scenario", static_cast<std::uint64_t>(scenario));
    constexpr int kBins = 60;
    const std::string group(to_string(scenario));
    switch (scenario) {
        case AggregateScenario::StrongInvertedU:
            return binomial_curve(HillExpParams::make(0.2, 0.8, 2.0, 6.0, 20.0), kBins, 1000, eng, group);
        case AggregateScenario::WeakInvertedU:
            return binomial_curve(HillExpParams::make(0.3, 0.35, 2.0, 6.0, 20.0), kBins, 1000, eng, group);
        case AggregateScenario::NoisyInvertedU:
            return binomial_curve(HillExpParams::make(0.2, 0.8, 2.0, 6.0, 20.0), kBins, 150, eng, group);
        case AggregateScenario::Mixed: {
            // Half the population rises and falls, half only decays.
            const auto iu = HillExpParams::make(0.2, 0.6, 2.0, 6.0, 20.0);
            const ModelParams mono(ModelKind::MonotonicDecay, {0.2, 0.3, 15.0});
            BinnedCurve c{group, {}};
            constexpr std::size_t kHalf = 40;
            for (int n = 1; n <= kBins; ++n) {
                std::binomial_distribution<int> a(kHalf, evaluate(iu, n)), b(kHalf, evaluate(mono, n));
                c.bins.push_back({n, double(a(eng) + b(eng)) / double(2 * kHalf), 2 * kHalf});
            }
            return c;
        }
        case AggregateScenario::Monotonic: {
            const ModelParams mono(ModelKind::MonotonicDecay, {0.2, 0.4, 15.0});
            BinnedCurve c{group, {}};
            for (int n = 1; n <= kBins; ++n) {
                std::binomial_distribution<int> d(500, evaluate(mono, n));
                c.bins.push_back({n, d(eng) / 500.0, 500});
            }
            return c;
        }
        case AggregateScenario::Flat: {
            BinnedCurve c{group, {}};
            std::binomial_distribution<int> d(500, 0.4);
            for (int n = 1; n <= kBins; ++n) c.bins.push_back({n, d(eng) / 500.0, 500});
            return c;
        }
    }
    throw std::logic_error("unknown scenario");
}

}  // namespace peakshift
