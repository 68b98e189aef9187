#include "peakshift/shrinkage.hpp"

#include <algorithm>
#include <cmath>

#include "peakshift/error.hpp"
#include "peakshift/rng.hpp"

namespace peakshift {

PeakObservation observation_from_bootstrap(std::string user_id, std::string group, double log_peak,
                                           std::span<const double> bootstrap_log_peaks) {
    PeakObservation o{std::move(user_id), std::move(group), log_peak, kFallbackObsSd,
                      bootstrap_log_peaks.size()};
    if (o.n_valid_boot >= kMinValidBootstraps)
        o.sigma_obs = stats::stddev(bootstrap_log_peaks, stats::VarianceConvention::Sample);
    return o;
}

PeakObservation estimate_obs_uncertainty(const ExposureSeries& series, const FitConfig& config,
                                         const UncertaintyOptions& options) {
    const SmoothedSeries smoothed = smooth_series(series, options.smoothing_window);
    const auto pts = to_points(smoothed.values);
    FitConfig cfg = config;
    cfg.peak_domain = PeakDomain{1.0, static_cast<double>(pts.size())};
    const FitResult original = fit(pts, ModelKind::HillExponential, cfg);
    if (!original.peak.has_interior_peak())
        throw DataError("user " + series.user_id + " has no interior peak");

    // Streams keyed by user and group so results do not depend on call order.
    const std::uint64_t base = derive_seed(options.seed, series.user_id + '\x1f' + series.group);
    std::vector<double> log_peaks;
    std::vector<DataPoint> sample(pts.size());
    std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
    for (std::size_t b = 0; b < options.B; ++b) {
        Engine eng = make_engine(base, "eb-bootstrap", b);
        for (auto& p : sample) p = pts[pick(eng)];
        try {
            const FitResult f = fit(sample, ModelKind::HillExponential, cfg);
            if (f.converged && f.peak.has_interior_peak()) log_peaks.push_back(std::log(*f.peak.n_star));
        } catch (const DataError&) {
        }
    }
    return observation_from_bootstrap(series.user_id, series.group, std::log(*original.peak.n_star),
                                      log_peaks);
}

PopulationPrior fit_prior(std::span<const PeakObservation> observations,
                          stats::VarianceConvention convention) {
    if (observations.size() < 2) throw DataError("prior needs at least two observations");
    std::vector<double> logs, obs_var;
    for (const auto& o : observations) {
        logs.push_back(o.log_peak);
        obs_var.push_back(o.sigma_obs * o.sigma_obs);
    }
    PopulationPrior p;
    p.mu_pop = stats::mean(logs);
    p.sigma2_pop = std::max(stats::variance(logs, convention) - stats::mean(obs_var), kPriorVarianceFloor);
    return p;
}

ShrinkageResult shrink(const PeakObservation& obs, const PopulationPrior& prior) {
    ShrinkageResult r;
    r.user_id = obs.user_id;
    r.group = obs.group;
    r.raw_peak = std::exp(obs.log_peak);
    r.sigma_obs = obs.sigma_obs;
    r.weight = prior.sigma2_pop / (prior.sigma2_pop + obs.sigma_obs * obs.sigma_obs);
    r.posterior_log_peak = r.weight * obs.log_peak + (1.0 - r.weight) * prior.mu_pop;
    // Keep the convex-combination guarantee exact under rounding.
    r.posterior_log_peak = std::clamp(r.posterior_log_peak, std::min(obs.log_peak, prior.mu_pop),
                                      std::max(obs.log_peak, prior.mu_pop));
    r.posterior_peak = std::exp(r.posterior_log_peak);
    return r;
}

HierarchicalSummary hierarchical_peak(std::span<const PeakObservation> observations,
                                      stats::VarianceConvention convention) {
    HierarchicalSummary s;
    s.prior = fit_prior(observations, convention);
    std::vector<double> raw, post;
    double wsum = 0.0;
    for (const auto& o : observations) {
        s.users.push_back(shrink(o, s.prior));
        raw.push_back(s.users.back().raw_peak);
        post.push_back(s.users.back().posterior_peak);
        wsum += s.users.back().weight;
    }
    s.naive_median = stats::median(raw);
    s.hierarchical_median = stats::median(post);
    s.mean_weight = wsum / static_cast<double>(observations.size());
    return s;
}

}  // namespace peakshift
