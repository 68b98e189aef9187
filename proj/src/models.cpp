#include "peakshift/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace peakshift {

namespace {

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

bool finite(double x) { return std::isfinite(x); }

bool in_unit(double x) { return finite(x) && x >= 0.0 && x <= 1.0; }

double hill_term(double n, double a, double b) {
    if (n <= 0.0) return 0.0;
    // n^a / (n^a + b^a) = 1 / (1 + (b/n)^a), stable for large exponents.
    const double log_ratio = a * (std::log(b) - std::log(n));
    if (log_ratio > 700.0) return 0.0;
    return 1.0 / (1.0 + std::exp(log_ratio));
}

void validate(ModelKind kind, const std::vector<double>& v) {
    require(v.size() == parameter_count(kind), "parameter count does not match model family");
    for (double x : v) require(finite(x), "model parameters must be finite");
    switch (kind) {
        case ModelKind::HillExponential:
            require(in_unit(v[0]) && in_unit(v[1]), "c0 and A must lie in [0, 1]");
            require(v[2] > 0 && v[3] > 0 && v[4] > 0, "a, b, s must be positive");
            break;
        case ModelKind::MonotonicDecay:
        case ModelKind::LogarithmicPeak:
            require(in_unit(v[0]) && in_unit(v[1]), "c0 and A must lie in [0, 1]");
            require(v[2] > 0, "s must be positive");
            break;
        case ModelKind::Flat:
            require(in_unit(v[0]), "c0 must lie in [0, 1]");
            break;
        case ModelKind::PureHill:
            require(in_unit(v[0]) && in_unit(v[1]), "c0 and A must lie in [0, 1]");
            require(v[2] > 0 && v[3] > 0, "a, b must be positive");
            break;
        case ModelKind::GaussianPeak:
            require(in_unit(v[0]) && in_unit(v[1]), "c0 and A must lie in [0, 1]");
            require(v[3] > 0, "sigma must be positive");
            break;
        case ModelKind::QuadraticPeak:
            break;
    }
}

}  // namespace

std::size_t parameter_count(ModelKind kind) noexcept {
    switch (kind) {
        case ModelKind::HillExponential: return 5;
        case ModelKind::MonotonicDecay: return 3;
        case ModelKind::Flat: return 1;
        case ModelKind::PureHill: return 4;
        case ModelKind::GaussianPeak: return 4;
        case ModelKind::LogarithmicPeak: return 3;
        case ModelKind::QuadraticPeak: return 3;
    }
    return 0;
}

std::string_view to_string(ModelKind kind) noexcept {
    switch (kind) {
        case ModelKind::HillExponential: return "hill_exponential";
        case ModelKind::MonotonicDecay: return "monotonic_decay";
        case ModelKind::Flat: return "flat";
        case ModelKind::PureHill: return "pure_hill";
        case ModelKind::GaussianPeak: return "gaussian_peak";
        case ModelKind::LogarithmicPeak: return "logarithmic_peak";
        case ModelKind::QuadraticPeak: return "quadratic_peak";
    }
    return "unknown";
}

ModelKind model_kind_from_string(std::string_view name) {
    for (ModelKind k : kAllModels)
        if (to_string(k) == name) return k;
    throw std::invalid_argument("unknown model family '" + std::string(name) + "'");
}

const std::vector<std::string>& parameter_names(ModelKind kind) {
    static const std::vector<std::string> hill_exp{"c0", "A", "a", "b", "s"};
    static const std::vector<std::string> mono{"c0", "A", "s"};
    static const std::vector<std::string> flat{"c0"};
    static const std::vector<std::string> pure_hill{"c0", "A", "a", "b"};
    static const std::vector<std::string> gauss{"c0", "A", "mu", "sigma"};
    static const std::vector<std::string> quad{"alpha", "beta", "gamma"};
    switch (kind) {
        case ModelKind::HillExponential: return hill_exp;
        case ModelKind::MonotonicDecay: return mono;
        case ModelKind::Flat: return flat;
        case ModelKind::PureHill: return pure_hill;
        case ModelKind::GaussianPeak: return gauss;
        case ModelKind::LogarithmicPeak: return mono;
        case ModelKind::QuadraticPeak: return quad;
    }
    return flat;
}

bool has_baseline(ModelKind kind) noexcept { return kind != ModelKind::QuadraticPeak; }

HillExpParams HillExpParams::make(double c0, double A, double a, double b, double s) {
    validate(ModelKind::HillExponential, {c0, A, a, b, s});
    return {c0, A, a, b, s};
}

ModelParams::ModelParams(ModelKind kind, std::vector<double> values)
    : kind_(kind), values_(std::move(values)) {
    validate(kind_, values_);
}

ModelParams::ModelParams(const HillExpParams& p)
    : ModelParams(ModelKind::HillExponential, {p.c0, p.A, p.a, p.b, p.s}) {}

double ModelParams::baseline() const noexcept {
    return has_baseline(kind_) ? values_[0] : 0.0;
}

HillExpParams ModelParams::as_hill_exp() const {
    if (kind_ != ModelKind::HillExponential)
        throw std::invalid_argument("parameters are not Hill-exponential");
    return {values_[0], values_[1], values_[2], values_[3], values_[4]};
}

double evaluate(const HillExpParams& p, double n) {
    require(n >= 0.0, "exposure must be non-negative");
    return p.c0 + p.A * hill_term(n, p.a, p.b) * std::exp(-n / p.s);
}

double evaluate(const ModelParams& params, double n) {
    require(n >= 0.0, "exposure must be non-negative");
    const auto& v = params.values();
    switch (params.kind()) {
        case ModelKind::HillExponential:
            return v[0] + v[1] * hill_term(n, v[2], v[3]) * std::exp(-n / v[4]);
        case ModelKind::MonotonicDecay:
            return v[0] + v[1] * std::exp(-n / v[2]);
        case ModelKind::Flat:
            return v[0];
        case ModelKind::PureHill:
            return v[0] + v[1] * hill_term(n, v[2], v[3]);
        case ModelKind::GaussianPeak: {
            const double z = (n - v[2]) / v[3];
            return v[0] + v[1] * std::exp(-0.5 * z * z);
        }
        case ModelKind::LogarithmicPeak:
            return v[0] + v[1] * std::log1p(n) * std::exp(-n / v[2]);
        case ModelKind::QuadraticPeak:
            return v[0] + v[1] * n + v[2] * n * n;
    }
    return 0.0;
}

PeakLocation peak_location(const ModelParams& params, PeakDomain domain, double grid_step) {
    if (!(domain.lo >= 0.0) || !(domain.hi > domain.lo) || !std::isfinite(domain.hi))
        throw std::invalid_argument("degenerate peak domain");
    if (!(grid_step > 0.0)) throw std::invalid_argument("grid step must be positive");

    if (params.kind() == ModelKind::Flat) return {};
    if (params.kind() == ModelKind::MonotonicDecay) {
        if (params[1] == 0.0) return {};
        return {domain.lo, false};
    }

    const auto n_cells = static_cast<std::size_t>(std::ceil((domain.hi - domain.lo) / grid_step));
    auto grid_at = [&](std::size_t i) {
        return i >= n_cells ? domain.hi : domain.lo + static_cast<double>(i) * grid_step;
    };
    std::size_t best = 0;
    double best_v = evaluate(params, domain.lo);
    double min_v = best_v;
    for (std::size_t i = 1; i <= n_cells; ++i) {
        const double v = evaluate(params, grid_at(i));
        if (v > best_v) {
            best_v = v;
            best = i;
        }
        min_v = std::min(min_v, v);
    }
    const double scale = std::max(1.0, std::abs(best_v));
    if (best_v - min_v <= 1e-12 * scale) return {};

    if (best == 0) return {domain.lo, false};
    if (best == n_cells) return {domain.hi, false};

    // Golden-section maximization within the bracketing grid cells.
    double lo = grid_at(best - 1), hi = grid_at(best + 1);
    constexpr double kInvPhi = 0.6180339887498949;
    double x1 = hi - kInvPhi * (hi - lo), x2 = lo + kInvPhi * (hi - lo);
    double f1 = evaluate(params, x1), f2 = evaluate(params, x2);
    while (hi - lo > 1e-4) {
        if (f1 >= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - kInvPhi * (hi - lo);
            f1 = evaluate(params, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + kInvPhi * (hi - lo);
            f2 = evaluate(params, x2);
        }
    }
    double refined = 0.5 * (lo + hi);
    if (evaluate(params, refined) < best_v) refined = grid_at(best);
    return {refined, true};
}

double decline_fraction(const ModelParams& params, double n_star, double n_end) {
    if (!(n_end > n_star)) throw std::invalid_argument("decline end must exceed the peak");
    const double peak = evaluate(params, n_star);
    const double floor = params.baseline();
    const double height = peak - floor;
    if (!(height > 0.0)) return 0.0;
    return std::clamp((peak - evaluate(params, n_end)) / height, 0.0, 1.0);
}

}  // namespace peakshift
