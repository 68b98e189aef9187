#pragma once

// The seven candidate curve families and their shape metrics.
//
//   HillExponential  c0 + A * n^a / (n^a + b^a) * exp(-n / s)
//   MonotonicDecay   c0 + A * exp(-n / s)
//   Flat             c0
//   PureHill         c0 + A * n^a / (n^a + b^a)
//   GaussianPeak     c0 + A * exp(-(n - mu)^2 / (2 sigma^2))
//   LogarithmicPeak  c0 + A * ln(1 + n) * exp(-n / s)
//   QuadraticPeak    alpha + beta * n + gamma * n^2

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace peakshift {

enum class ModelKind {
    HillExponential,
    MonotonicDecay,
    Flat,
    PureHill,
    GaussianPeak,
    LogarithmicPeak,
    QuadraticPeak,
};

inline constexpr std::array<ModelKind, 7> kAllModels = {
    ModelKind::HillExponential, ModelKind::MonotonicDecay, ModelKind::Flat,
    ModelKind::PureHill,        ModelKind::GaussianPeak,   ModelKind::LogarithmicPeak,
    ModelKind::QuadraticPeak,
};

std::size_t parameter_count(ModelKind kind) noexcept;
std::string_view to_string(ModelKind kind) noexcept;
ModelKind model_kind_from_string(std::string_view name);
const std::vector<std::string>& parameter_names(ModelKind kind);

// Whether the family has a baseline term c0 (everything except QuadraticPeak).
bool has_baseline(ModelKind kind) noexcept;

struct HillExpParams {
    double c0 = 0.0;
    double A = 0.0;
    double a = 1.0;
    double b = 1.0;
    double s = 1.0;

    // Validating factory: c0, A in [0, 1]; a, b, s > 0.
    static HillExpParams make(double c0, double A, double a, double b, double s);
};

// Parameter vector tagged with its family. The constructor enforces the
// family's parameter count and domain.
class ModelParams {
public:
    ModelParams(ModelKind kind, std::vector<double> values);
    explicit ModelParams(const HillExpParams& p);

    ModelKind kind() const noexcept { return kind_; }
    const std::vector<double>& values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_.at(i); }
    double baseline() const noexcept;  // c0, or 0 for QuadraticPeak

    HillExpParams as_hill_exp() const;

private:
    ModelKind kind_;
    std::vector<double> values_;
};

// Model value at exposure n >= 0; throws std::invalid_argument for n < 0.
double evaluate(const ModelParams& params, double n);
double evaluate(const HillExpParams& params, double n);

struct PeakLocation {
    std::optional<double> n_star;  // empty for shapes without a maximum
    bool interior = false;         // false when the maximum sits on the domain edge

    bool has_interior_peak() const noexcept { return n_star.has_value() && interior; }
};

struct PeakDomain {
    double lo = 1.0;
    double hi = 100.0;
};

inline constexpr double kDefaultGridStep = 0.01;

// Grid argmax over the domain (ties toward smaller n), refined by golden-section
// search inside the bracketing grid cell to 1e-3 exposures. Flat returns no
// peak; MonotonicDecay returns the lower edge flagged non-interior.
PeakLocation peak_location(const ModelParams& params, PeakDomain domain,
                           double grid_step = kDefaultGridStep);

// Relative decline from the peak to n_end, measured against the height of the
// peak above the family baseline, clamped to [0, 1].
double decline_fraction(const ModelParams& params, double n_star, double n_end);

}  // namespace peakshift
