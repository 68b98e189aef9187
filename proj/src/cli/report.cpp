#include "peakshift/report.hpp"

#include <charconv>
#include <cmath>

namespace peakshift {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

ordered_json number_or_null(double v) {
    return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

namespace {

ordered_json optional_number(const std::optional<double>& v) {
    return v ? number_or_null(*v) : ordered_json(nullptr);
}

}  // namespace

ordered_json to_json(const FitResult& f) {
    ordered_json params = ordered_json::object();
    const auto& names = parameter_names(f.kind);
    for (std::size_t i = 0; i < names.size(); ++i) params[names[i]] = number_or_null(f.params[i]);
    return {{"model", std::string(to_string(f.kind))},
            {"params", params},
            {"sse", number_or_null(f.sse)},
            {"r2", number_or_null(f.r2)},
            {"log_likelihood", number_or_null(f.log_likelihood)},
            {"aic", number_or_null(f.aic)},
            {"bic", number_or_null(f.bic)},
            {"n_obs", f.n_obs},
            {"converged", f.converged},
            {"peak", optional_number(f.peak.n_star)},
            {"peak_interior", f.peak.interior}};
}

ordered_json to_json(const ModelFits& fits) {
    ordered_json arr = ordered_json::array();
    for (const auto& f : fits.all()) arr.push_back(to_json(f));
    return arr;
}

ordered_json to_json(const LrtResult& l) {
    return {{"statistic", number_or_null(l.statistic)}, {"df", l.df}, {"p_value", number_or_null(l.p_value)}};
}

ordered_json to_json(const AggregateClass& c) {
    ordered_json gates = ordered_json::array();
    for (const auto& g : c.gates)
        gates.push_back({{"gate", g.name},
                         {"value", number_or_null(g.value)},
                         {"threshold", g.threshold},
                         {"evaluated", g.evaluated},
                         {"passed", g.passed}});
    return {{"label", std::string(to_string(c.label))},
            {"best_by_aic", std::string(to_string(c.best_by_aic))},
            {"gates", gates}};
}

ordered_json to_json(const AggregateAssessment& a) {
    ordered_json j = to_json(a.classification);
    j["diagnostics"] = {{"oos_r2", number_or_null(a.diagnostics.oos_r2)},
                        {"ascent_p", number_or_null(a.diagnostics.ascent_p)},
                        {"permutation_p", optional_number(a.diagnostics.permutation_p)},
                        {"decline", number_or_null(a.diagnostics.decline)}};
    if (a.lrt) j["lrt_vs_monotonic"] = to_json(*a.lrt);
    j["fits"] = to_json(a.fits);
    return j;
}

ordered_json to_json(const StrictGateReport& r) {
    return {{"lrt_p", number_or_null(r.lrt_p)},
            {"delta_aic", number_or_null(r.delta_aic)},
            {"r2", number_or_null(r.r2)},
            {"n_star", optional_number(r.n_star)},
            {"interior", r.interior},
            {"decline", number_or_null(r.decline)},
            {"hillexp_bic", number_or_null(r.hillexp_bic)},
            {"purehill_bic", number_or_null(r.purehill_bic)},
            {"passed", r.passed},
            {"failure", r.failure}};
}

ordered_json to_json(const PrevalenceEstimate& p) {
    return {{"point", optional_number(p.point)},
            {"low", p.low},
            {"high", p.high},
            {"conditioning_warning", p.conditioning_warning}};
}

ordered_json to_json(const CalibrationReport& r) {
    ordered_json rows = ordered_json::array();
    for (const auto& row : r.rows) {
        ordered_json j = {{"variant", row.variant},
                          {"fp_monotonic", row.fp_monotonic},
                          {"fp_flat", row.fp_flat},
                          {"tp_inverted_u", row.tp_inverted_u},
                          {"selectivity", row.selectivity},
                          {"excess", optional_number(row.excess)}};
        j["prevalence"] = row.prevalence ? to_json(*row.prevalence) : ordered_json(nullptr);
        rows.push_back(j);
    }
    return {{"n_per_condition", r.n_per_condition},
            {"eligible", {{"monotonic", r.eligible_monotonic},
                          {"flat", r.eligible_flat},
                          {"inverted_u", r.eligible_inverted_u}}},
            {"rows", rows}};
}

ordered_json to_json(const DistortionReport& r) {
    return {{"group", r.group},
            {"aggregate_peak", r.aggregate_peak},
            {"individual_peaks",
             {{"median", r.individual.median},
              {"q25", r.individual.q25},
              {"q75", r.individual.q75},
              {"iqr", r.individual.iqr},
              {"skewness", optional_number(r.individual.skewness)},
              {"count", r.individual.count}}},
            {"D", r.distortion},
            {"median_ci", {r.ci_low, r.ci_high}},
            {"stability_fraction", optional_number(r.stability_fraction)}};
}

ordered_json to_json(const SelectionSummary& s) {
    return {{"dataset", s.dataset}, {"rho", s.rho}, {"sigma", s.sigma},
            {"s_bar", s.s_bar},     {"n", s.n},     {"n_ref", s.n_ref}};
}

ordered_json to_json(const PooledResult& r) {
    return {{"delta_hat", r.delta_hat},
            {"variance_bound", r.variance_bound},
            {"null_variance_bound", r.null_variance_bound},
            {"z", r.z},
            {"p_one_sided", r.p_one_sided},
            {"note", r.note},
            {"z_normalization", "delta_hat / sqrt(null_variance_bound), conservative"}};
}

ordered_json to_json(const WithinUserPermutation& r) {
    return {{"r_obs", r.r_obs},
            {"p_value", r.p_value},
            {"permutations", r.permutations},
            {"multi_group_users", r.multi_group_users},
            {"exchangeable", r.exchangeable}};
}

ordered_json to_json(const HierarchicalSummary& s) {
    return {{"mu_pop", s.prior.mu_pop},
            {"sigma2_pop", s.prior.sigma2_pop},
            {"naive_median", s.naive_median},
            {"hierarchical_median", s.hierarchical_median},
            {"mean_weight", s.mean_weight},
            {"n_users", s.users.size()},
            {"posterior", "normal-normal posterior mean on the log scale"}};
}

ordered_json to_json(const FactorialCell& c) {
    return {{"survival_bias", c.survival_bias},
            {"amplitude_correlation", c.amplitude_correlation},
            {"individual_median", c.individual_median},
            {"individual_count", c.individual_count},
            {"aggregate_peak", c.aggregate_peak},
            {"aggregate_interior", c.aggregate_interior},
            {"D", c.distortion},
            {"failed", c.failed},
            {"message", c.message}};
}

ordered_json to_json(const PowerCell& c) {
    return {{"tier", c.tier},       {"amplitude", c.amplitude}, {"bin_size", c.bin_size},
            {"detections", c.detections}, {"reps", c.reps},     {"power", c.power}};
}

}  // namespace peakshift
