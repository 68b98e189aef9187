#include "peakshift/fit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "peakshift/error.hpp"
#include "peakshift/parallel.hpp"
#include "peakshift/rng.hpp"
#include "peakshift/stats.hpp"
#include "simplex.hpp"

namespace peakshift {

namespace {

constexpr double kMinVariance = 1e-300;

// --- shape-parameter transforms --------------------------------------------

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double logit(double u) {
    u = std::clamp(u, 1e-6, 1.0 - 1e-6);
    return std::log(u / (1.0 - u));
}

struct ShapeDim {
    ParamBounds bounds;
    bool log_scale = true;

    double from_unit(double u) const {
        if (log_scale) {
            const double llo = std::log(bounds.lo), lhi = std::log(bounds.hi);
            return std::exp(llo + u * (lhi - llo));
        }
        return bounds.lo + u * (bounds.hi - bounds.lo);
    }
    double from_z(double z) const { return from_unit(sigmoid(z)); }
};

std::vector<ShapeDim> shape_dims(ModelKind kind, const FitBounds& b) {
    switch (kind) {
        case ModelKind::HillExponential: return {{b.onset}, {b.half_max}, {b.decay}};
        case ModelKind::MonotonicDecay: return {{b.decay}};
        case ModelKind::PureHill: return {{b.onset}, {b.half_max}};
        case ModelKind::GaussianPeak: return {{b.center, false}, {b.width}};
        case ModelKind::LogarithmicPeak: return {{b.decay}};
        case ModelKind::Flat:
        case ModelKind::QuadraticPeak: return {};
    }
    return {};
}

double hill(double log_n, double a, double log_b) {
    const double lr = a * (log_b - log_n);
    if (lr > 700.0) return 0.0;
    return 1.0 / (1.0 + std::exp(lr));
}

// Shape basis g(n) for c0 + A g(n) families.
void shape_values(ModelKind kind, std::span<const double> shape, std::span<const DataPoint> data,
                  std::span<const double> log_n, std::vector<double>& g) {
    g.resize(data.size());
    switch (kind) {
        case ModelKind::HillExponential: {
            const double a = shape[0], lb = std::log(shape[1]), inv_s = 1.0 / shape[2];
            for (std::size_t i = 0; i < data.size(); ++i)
                g[i] = data[i].n > 0 ? hill(log_n[i], a, lb) * std::exp(-data[i].n * inv_s) : 0.0;
            break;
        }
        case ModelKind::MonotonicDecay: {
            const double inv_s = 1.0 / shape[0];
            for (std::size_t i = 0; i < data.size(); ++i) g[i] = std::exp(-data[i].n * inv_s);
            break;
        }
        case ModelKind::PureHill: {
            const double a = shape[0], lb = std::log(shape[1]);
            for (std::size_t i = 0; i < data.size(); ++i)
                g[i] = data[i].n > 0 ? hill(log_n[i], a, lb) : 0.0;
            break;
        }
        case ModelKind::GaussianPeak: {
            const double mu = shape[0], sig = shape[1];
            for (std::size_t i = 0; i < data.size(); ++i) {
                const double z = (data[i].n - mu) / sig;
                g[i] = std::exp(-0.5 * z * z);
            }
            break;
        }
        case ModelKind::LogarithmicPeak: {
            const double inv_s = 1.0 / shape[0];
            for (std::size_t i = 0; i < data.size(); ++i)
                g[i] = std::log1p(data[i].n) * std::exp(-data[i].n * inv_s);
            break;
        }
        case ModelKind::Flat:
        case ModelKind::QuadraticPeak: break;
    }
}

struct LinearPair {
    double c0 = 0.0;
    double A = 0.0;
};

// Exact minimizer of sum w (y - c0 - A g)^2 over the box.
LinearPair solve_box_pair(std::span<const DataPoint> data, std::span<const double> g,
                          ParamBounds bc, ParamBounds ba) {
    double sw = 0, sg = 0, sgg = 0, sy = 0, sgy = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double w = data[i].weight;
        sw += w;
        sg += w * g[i];
        sgg += w * g[i] * g[i];
        sy += w * data[i].value;
        sgy += w * g[i] * data[i].value;
    }
    auto q = [&](double c, double A) {
        return c * c * sw + 2 * c * A * sg + A * A * sgg - 2 * c * sy - 2 * A * sgy;
    };
    const double det = sw * sgg - sg * sg;
    if (det > 1e-14 * sw * std::max(sgg, 1e-300)) {
        const double c = (sy * sgg - sg * sgy) / det;
        const double A = (sw * sgy - sg * sy) / det;
        if (c >= bc.lo && c <= bc.hi && A >= ba.lo && A <= ba.hi) return {c, A};
    }
    LinearPair best{bc.lo, ba.lo};
    double best_q = std::numeric_limits<double>::infinity();
    auto consider = [&](double c, double A) {
        const double v = q(c, A);
        if (v < best_q) {
            best_q = v;
            best = {c, A};
        }
    };
    for (double c : {bc.lo, bc.hi}) {
        const double A = sgg > 0 ? std::clamp((sgy - c * sg) / sgg, ba.lo, ba.hi) : ba.lo;
        consider(c, A);
    }
    for (double A : {ba.lo, ba.hi}) {
        const double c = sw > 0 ? std::clamp((sy - A * sg) / sw, bc.lo, bc.hi) : bc.lo;
        consider(c, A);
    }
    return best;
}

double residual_sse(std::span<const DataPoint> data, std::span<const double> g, LinearPair p) {
    double s = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double r = data[i].value - p.c0 - p.A * g[i];
        s += data[i].weight * r * r;
    }
    return s;
}

std::vector<double> assemble(ModelKind kind, LinearPair lin, std::span<const double> shape) {
    std::vector<double> v{std::clamp(lin.c0, 0.0, 1.0), std::clamp(lin.A, 0.0, 1.0)};
    v.insert(v.end(), shape.begin(), shape.end());
    (void)kind;
    return v;
}

// Weighted least squares for alpha + beta n + gamma n^2 on a centered, scaled
// abscissa; drops to lower degree when the design is singular.
std::vector<double> solve_quadratic(std::span<const DataPoint> data) {
    double sw = 0, mean_n = 0;
    for (const auto& p : data) {
        sw += p.weight;
        mean_n += p.weight * p.n;
    }
    mean_n /= sw;
    double var = 0;
    for (const auto& p : data) var += p.weight * (p.n - mean_n) * (p.n - mean_n);
    const double sc = var > 0 ? std::sqrt(var / sw) : 1.0;

    for (int degree = 2; degree >= 0; --degree) {
        const int m = degree + 1;
        double M[3][4] = {};
        for (const auto& p : data) {
            const double t = (p.n - mean_n) / sc;
            const double basis[3] = {1.0, t, t * t};
            for (int r = 0; r < m; ++r) {
                for (int c = 0; c < m; ++c) M[r][c] += p.weight * basis[r] * basis[c];
                M[r][3] += p.weight * basis[r] * p.value;
            }
        }
        bool singular = false;
        for (int col = 0; col < m && !singular; ++col) {
            int piv = col;
            for (int r = col + 1; r < m; ++r)
                if (std::abs(M[r][col]) > std::abs(M[piv][col])) piv = r;
            if (std::abs(M[piv][col]) < 1e-12 * sw) {
                singular = true;
                break;
            }
            for (int c = 0; c < 4; ++c) std::swap(M[col][c], M[piv][c]);
            for (int r = 0; r < m; ++r) {
                if (r == col) continue;
                const double f = M[r][col] / M[col][col];
                for (int c = col; c < 4; ++c) M[r][c] -= f * M[col][c];
            }
        }
        if (singular) continue;
        double coef[3] = {0, 0, 0};
        for (int r = 0; r < m; ++r) coef[r] = M[r][3] / M[r][r];
        const double a2 = coef[0], b2 = coef[1], g2 = coef[2];
        const double k = mean_n / sc;
        return {a2 - b2 * k + g2 * k * k, b2 / sc - 2.0 * g2 * k / sc, g2 / (sc * sc)};
    }
    return {0.0, 0.0, 0.0};
}

std::vector<DataPoint> positive_weight(std::span<const DataPoint> data) {
    std::vector<DataPoint> out;
    out.reserve(data.size());
    for (const auto& p : data) {
        if (!std::isfinite(p.n) || !std::isfinite(p.value) || !std::isfinite(p.weight) ||
            p.weight < 0.0 || p.n < 0.0)
            throw std::invalid_argument("data points need finite n >= 0, value, and weight >= 0");
        if (p.weight > 0.0) out.push_back(p);
    }
    return out;
}

FitResult finalize(std::span<const DataPoint> data, ModelKind kind, std::vector<double> values,
                   bool converged, const FitConfig& config) {
    ModelParams params(kind, std::move(values));
    FitResult r{.kind = kind, .params = params, .peak = {}};
    r.n_obs = data.size();
    r.sse = weighted_sse(data, params);

    double sw = 0, sy = 0;
    for (const auto& p : data) {
        sw += p.weight;
        sy += p.weight * p.value;
    }
    const double ybar = sy / sw;
    for (const auto& p : data) r.tss += p.weight * (p.value - ybar) * (p.value - ybar);
    r.r2 = r.tss > 0.0 ? 1.0 - r.sse / r.tss : 0.0;

    const double n = static_cast<double>(r.n_obs);
    const double k = static_cast<double>(information_parameter_count(kind));
    const double sigma2 = std::max(r.sse / n, kMinVariance);
    r.log_likelihood = -0.5 * n * (std::log(2.0 * M_PI * sigma2) + 1.0);
    r.aic = 2.0 * k - 2.0 * r.log_likelihood;
    r.bic = k * std::log(n) - 2.0 * r.log_likelihood;

    PeakDomain domain;
    if (config.peak_domain) {
        domain = *config.peak_domain;
    } else {
        const auto [lo, hi] = std::minmax_element(
            data.begin(), data.end(), [](const auto& a, const auto& b) { return a.n < b.n; });
        domain = {lo->n, hi->n};
    }
    if (domain.hi > domain.lo) r.peak = peak_location(params, domain, config.grid_step);
    r.converged = converged;
    return r;
}

}  // namespace

void FitConfig::validate() const {
    auto check = [](ParamBounds b, const char* name, bool positive) {
        if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || !(b.lo < b.hi) ||
            (positive && !(b.lo > 0.0)))
            throw ConfigError(std::string("invalid bounds for ") + name);
    };
    check(bounds.baseline, "c0", false);
    check(bounds.amplitude, "A", false);
    check(bounds.onset, "a", true);
    check(bounds.half_max, "b", true);
    check(bounds.decay, "s", true);
    check(bounds.center, "mu", false);
    check(bounds.width, "sigma", true);
    if (n_starts < 1) throw ConfigError("n_starts must be >= 1");
    if (max_iterations < 10) throw ConfigError("max_iterations must be >= 10");
    if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
    if (!(grid_step > 0.0)) throw ConfigError("grid_step must be positive");
}

std::size_t information_parameter_count(ModelKind kind) noexcept {
    return parameter_count(kind) + 1;
}

double weighted_sse(std::span<const DataPoint> data, const ModelParams& params) {
    double s = 0.0;
    for (const auto& p : data) {
        const double r = p.value - evaluate(params, p.n);
        s += p.weight * r * r;
    }
    return s;
}

FitTrace fit_with_trace(std::span<const DataPoint> raw, ModelKind kind, const FitConfig& config) {
    config.validate();
    const auto data = positive_weight(raw);
    const std::size_t k = parameter_count(kind);
    if (data.size() < k + 2)
        throw DataError("fit of " + std::string(to_string(kind)) + " needs at least " +
                        std::to_string(k + 2) + " points, got " + std::to_string(data.size()));

    FitTrace trace{.result = finalize(data, ModelKind::Flat, {0.0}, true, config), .start_sse = {}};
    const auto& b = config.bounds;

    if (kind == ModelKind::Flat) {
        double sw = 0, sy = 0;
        for (const auto& p : data) {
            sw += p.weight;
            sy += p.weight * p.value;
        }
        trace.result = finalize(data, kind, {std::clamp(sy / sw, b.baseline.lo, b.baseline.hi)},
                                true, config);
        trace.start_sse.push_back(trace.result.sse);
        return trace;
    }
    if (kind == ModelKind::QuadraticPeak) {
        trace.result = finalize(data, kind, solve_quadratic(data), true, config);
        trace.start_sse.push_back(trace.result.sse);
        return trace;
    }

    const auto dims = shape_dims(kind, b);
    const std::size_t d = dims.size();
    std::vector<double> log_n(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
        log_n[i] = data[i].n > 0 ? std::log(data[i].n) : -std::numeric_limits<double>::infinity();

    std::vector<double> g, shape(d);
    auto objective = [&](std::span<const double> z) {
        for (std::size_t j = 0; j < d; ++j) shape[j] = dims[j].from_z(z[j]);
        shape_values(kind, shape, data, log_n, g);
        const LinearPair lin = solve_box_pair(data, g, b.baseline, b.amplitude);
        return residual_sse(data, g, lin);
    };

    // Latin-hypercube starts in the unit cube of shape coordinates.
    Engine eng = make_engine(config.seed, "fit-starts", static_cast<std::uint64_t>(kind));
    const auto n_starts = static_cast<std::size_t>(config.n_starts);
    std::vector<std::vector<std::size_t>> strata(d, std::vector<std::size_t>(n_starts));
    for (auto& perm : strata) {
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), eng);
    }

    detail::SimplexOptions opt;
    opt.max_evaluations = config.max_iterations;
    opt.f_tolerance = config.tolerance;

    detail::SimplexResult best;
    best.f = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < n_starts; ++s) {
        std::vector<double> z0(d);
        for (std::size_t j = 0; j < d; ++j) {
            const double u = (static_cast<double>(strata[j][s]) + uniform01(eng)) /
                             static_cast<double>(n_starts);
            z0[j] = logit(u);
        }
        trace.start_sse.push_back(objective(z0));
        auto res = detail::nelder_mead(objective, z0, opt);
        if (res.f < best.f) best = std::move(res);
    }

    // Polish: restart from the incumbent until the simplex stops improving.
    for (int restart = 0; restart < 4; ++restart) {
        opt.initial_step = 0.1;
        auto res = detail::nelder_mead(objective, best.x, opt);
        const bool improved = res.f < best.f * (1.0 - config.tolerance) && res.f < best.f;
        if (res.f <= best.f) {
            res.converged = res.converged || best.converged;
            best = std::move(res);
        }
        if (!improved) break;
    }

    for (std::size_t j = 0; j < d; ++j) shape[j] = dims[j].from_z(best.x[j]);
    shape_values(kind, shape, data, log_n, g);
    const LinearPair lin = solve_box_pair(data, g, b.baseline, b.amplitude);
    trace.result = finalize(data, kind, assemble(kind, lin, shape), best.converged, config);
    return trace;
}

FitResult fit(std::span<const DataPoint> data, ModelKind kind, const FitConfig& config) {
    return fit_with_trace(data, kind, config).result;
}

ModelFits::ModelFits(std::vector<FitResult> results) : results_(std::move(results)) {}

const FitResult& ModelFits::at(ModelKind kind) const {
    for (const auto& r : results_)
        if (r.kind == kind) return r;
    throw std::out_of_range("no fit for model " + std::string(to_string(kind)));
}

ModelKind ModelFits::best_by_aic() const {
    if (results_.empty()) throw std::out_of_range("no fits");
    const FitResult* best = &results_.front();
    for (const auto& r : results_)
        if (r.aic < best->aic) best = &r;
    return best->kind;
}

ModelFits fit_families(std::span<const DataPoint> data, std::span<const ModelKind> kinds,
                       const FitConfig& config) {
    std::vector<FitResult> out;
    out.reserve(kinds.size());
    for (ModelKind k : kinds) out.push_back(fit(data, k, config));
    return ModelFits(std::move(out));
}

ModelFits fit_all(std::span<const DataPoint> data, const FitConfig& config) {
    return fit_families(data, kAllModels, config);
}

std::vector<DataPoint> to_points(const BinnedCurve& curve, bool weight_by_count) {
    std::vector<DataPoint> pts;
    pts.reserve(curve.bins.size());
    for (const auto& bin : curve.bins)
        pts.push_back({static_cast<double>(bin.exposure), bin.mean,
                       weight_by_count ? static_cast<double>(bin.count) : 1.0});
    return pts;
}

std::vector<DataPoint> to_points(std::span<const double> values) {
    std::vector<DataPoint> pts;
    pts.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        pts.push_back({static_cast<double>(i + 1), values[i], 1.0});
    return pts;
}

LrtResult compare_lrt(const FitResult& full, const FitResult& restricted, double df) {
    if (full.n_obs != restricted.n_obs)
        throw std::invalid_argument("likelihood ratio test needs fits on the same observations");
    LrtResult r;
    r.df = df;
    if (full.sse >= restricted.sse) return r;  // no improvement, clamp to 0
    if (full.sse <= 0.0) {
        r.statistic = std::numeric_limits<double>::infinity();
        r.p_value = 0.0;
        return r;
    }
    r.statistic = static_cast<double>(full.n_obs) * std::log(restricted.sse / full.sse);
    r.p_value = stats::chi_squared_sf(r.statistic, df);
    return r;
}

LrtResult compare_lrt(const FitResult& full, const FitResult& restricted) {
    if (full.kind != ModelKind::HillExponential)
        throw std::invalid_argument("full model must be Hill-exponential");
    switch (restricted.kind) {
        case ModelKind::MonotonicDecay: return compare_lrt(full, restricted, 2.0);
        case ModelKind::Flat: return compare_lrt(full, restricted, 4.0);
        default: throw std::invalid_argument("restricted model is not a designated reduction");
    }
}

double oos_r2(std::span<const DataPoint> raw, ModelKind kind, const FitConfig& config) {
    std::vector<DataPoint> data(raw.begin(), raw.end());
    std::stable_sort(data.begin(), data.end(),
                     [](const auto& a, const auto& b) { return a.n < b.n; });
    if (data.size() < 5) throw DataError("out-of-sample R^2 needs at least 5 bins");
    std::vector<DataPoint> train, held;
    for (std::size_t i = 0; i < data.size(); ++i) ((i + 1) % 5 == 0 ? held : train).push_back(data[i]);
    if (held.empty()) throw DataError("no held-out bins");

    FitConfig cfg = config;
    if (!cfg.peak_domain) cfg.peak_domain = PeakDomain{data.front().n, data.back().n};
    const FitResult f = fit(train, kind, cfg);

    double sw = 0, sy = 0;
    for (const auto& p : held) {
        sw += p.weight;
        sy += p.weight * p.value;
    }
    if (!(sw > 0)) throw DataError("held-out bins carry no weight");
    const double ybar = sy / sw;
    double tss = 0;
    for (const auto& p : held) tss += p.weight * (p.value - ybar) * (p.value - ybar);
    const double sse = weighted_sse(held, f.params);
    return tss > 0.0 ? 1.0 - sse / tss : 0.0;
}

BootstrapResult bootstrap_fit(std::span<const DataPoint> data, ModelKind kind,
                              const FitConfig& config, std::size_t B,
                              BootstrapStatistic statistic, unsigned jobs) {
    if (B < 100) throw std::invalid_argument("bootstrap needs B >= 100");
    if (data.empty()) throw DataError("bootstrap on empty data");

    FitConfig cfg = config;
    if (!cfg.peak_domain) {
        const auto [lo, hi] = std::minmax_element(
            data.begin(), data.end(), [](const auto& a, const auto& b) { return a.n < b.n; });
        cfg.peak_domain = PeakDomain{lo->n, hi->n};
    }

    const std::size_t dims = statistic == BootstrapStatistic::Peak ? 1 : parameter_count(kind);
    std::vector<std::optional<std::vector<double>>> draws(B);
    parallel_for(B, jobs, [&](std::size_t i) {
        Engine eng = make_engine(config.seed, "bootstrap", i);
        std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
        std::vector<DataPoint> sample(data.size());
        for (auto& p : sample) p = data[pick(eng)];
        try {
            const FitResult f = fit(sample, kind, cfg);
            if (!f.converged) return;
            if (statistic == BootstrapStatistic::Peak) {
                if (!f.peak.n_star) return;
                draws[i] = std::vector<double>{*f.peak.n_star};
            } else {
                draws[i] = f.params.values();
            }
        } catch (const DataError&) {
        }
    });

    BootstrapResult r;
    r.statistic = statistic;
    r.requested = B;
    r.samples.assign(dims, {});
    for (const auto& d : draws) {
        if (!d) {
            ++r.failed;
            continue;
        }
        for (std::size_t j = 0; j < dims; ++j) r.samples[j].push_back((*d)[j]);
    }
    if (2 * r.failed > B) throw FitError("unstable fit: more than half of bootstrap refits failed");
    for (const auto& s : r.samples) {
        r.lower.push_back(stats::quantile(s, 0.025));
        r.upper.push_back(stats::quantile(s, 0.975));
    }
    if (statistic == BootstrapStatistic::Params) {
        r.correlation.assign(dims * dims, 0.0);
        for (std::size_t i = 0; i < dims; ++i)
            for (std::size_t j = 0; j < dims; ++j)
                r.correlation[i * dims + j] = i == j ? 1.0 : stats::pearson(r.samples[i], r.samples[j]);
    }
    return r;
}

AscentResult ascent_significance(const BinnedCurve& curve, double n_star) {
    AscentResult r;
    std::vector<double> x, y;
    for (const auto& bin : curve.bins) {
        if (static_cast<double>(bin.exposure) < n_star) {
            x.push_back(bin.exposure);
            y.push_back(bin.mean);
        }
    }
    r.n_bins = x.size();
    if (x.size() < 3) {
        r.insufficient_support = true;
        return r;
    }
    const double mx = stats::mean(x), my = stats::mean(y);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    r.slope = sxy / sxx;
    double rss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - my - r.slope * (x[i] - mx);
        rss += e * e;
    }
    const double df = static_cast<double>(x.size()) - 2.0;
    const double se = std::sqrt(rss / df / sxx);
    if (se <= 1e-15 * std::max(1.0, std::abs(r.slope))) {
        r.t_statistic = r.slope > 0 ? std::numeric_limits<double>::infinity()
                                    : (r.slope < 0 ? -std::numeric_limits<double>::infinity() : 0.0);
        r.p_value = r.slope > 0 ? 0.0 : (r.slope < 0 ? 1.0 : 0.5);
        return r;
    }
    r.t_statistic = r.slope / se;
    r.p_value = stats::student_t_sf(r.t_statistic, df);
    return r;
}

namespace {

FitConfig null_refit_config(const FitConfig& config, const PermutationOptions& perm) {
    FitConfig cfg = config;
    if (perm.refit_starts > 0) cfg.n_starts = perm.refit_starts;
    return cfg;
}

PermutationResult summarize(double observed, std::vector<double> null_r2) {
    PermutationResult r;
    r.observed_r2 = observed;
    for (double v : null_r2)
        if (v >= observed) ++r.exceedances;
    r.p_value = static_cast<double>(r.exceedances) / static_cast<double>(null_r2.size());
    r.null_r2 = std::move(null_r2);
    return r;
}

}  // namespace

PermutationResult permutation_fit_test(std::span<const ExposureSeries> series,
                                       const AggregateFitOptions& aggregate,
                                       const FitConfig& config, const PermutationOptions& perm,
                                       unsigned jobs) {
    if (perm.B < 100) throw std::invalid_argument("permutation test needs B >= 100");
    const BinnedCurve observed_curve =
        aggregate_curve(series, aggregate.max_exposure, aggregate.min_bin_count);
    const auto observed_pts = to_points(observed_curve, aggregate.weight_by_count);
    const FitResult observed = fit(observed_pts, ModelKind::HillExponential, config);

    const FitConfig null_cfg = null_refit_config(config, perm);
    std::vector<double> null_r2(perm.B);
    parallel_for(perm.B, jobs, [&](std::size_t i) {
        Engine eng = make_engine(perm.seed, "permutation-fit", i);
        std::vector<ExposureSeries> shuffled(series.begin(), series.end());
        for (auto& s : shuffled) std::shuffle(s.engagement.begin(), s.engagement.end(), eng);
        const BinnedCurve c = aggregate_curve(shuffled, aggregate.max_exposure, aggregate.min_bin_count);
        null_r2[i] = fit(to_points(c, aggregate.weight_by_count), ModelKind::HillExponential, null_cfg).r2;
    });
    return summarize(observed.r2, std::move(null_r2));
}

PermutationResult permutation_fit_test(const BinnedCurve& curve, const FitConfig& config,
                                       const PermutationOptions& perm, bool weight_by_count,
                                       unsigned jobs) {
    if (perm.B < 100) throw std::invalid_argument("permutation test needs B >= 100");
    const FitResult observed =
        fit(to_points(curve, weight_by_count), ModelKind::HillExponential, config);

    const FitConfig null_cfg = null_refit_config(config, perm);
    std::vector<double> null_r2(perm.B);
    parallel_for(perm.B, jobs, [&](std::size_t i) {
        Engine eng = make_engine(perm.seed, "permutation-bins", i);
        std::vector<CurveBin> bins = curve.bins;
        std::vector<std::pair<double, std::size_t>> payload;
        payload.reserve(bins.size());
        for (const auto& b : bins) payload.emplace_back(b.mean, b.count);
        std::shuffle(payload.begin(), payload.end(), eng);
        BinnedCurve c{curve.group, {}};
        for (std::size_t j = 0; j < bins.size(); ++j)
            c.bins.push_back({bins[j].exposure, payload[j].first, payload[j].second});
        null_r2[i] = fit(to_points(c, weight_by_count), ModelKind::HillExponential, null_cfg).r2;
    });
    return summarize(observed.r2, std::move(null_r2));
}

}  // namespace peakshift
