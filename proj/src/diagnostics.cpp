#include "peakshift/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "peakshift/error.hpp"
#include "peakshift/parallel.hpp"
#include "peakshift/rng.hpp"
#include "peakshift/stats.hpp"

namespace peakshift {

PeakSummary summarize_peaks(std::span<const double> peaks) {
    PeakSummary s;
    s.count = peaks.size();
    if (peaks.empty()) return s;
    s.median = stats::median(peaks);
    s.q25 = stats::quantile(peaks, 0.25);
    s.q75 = stats::quantile(peaks, 0.75);
    s.iqr = s.q75 - s.q25;
    if (peaks.size() >= 3) s.skewness = stats::skewness(peaks);
    return s;
}

DistortionReport distortion_factor(double aggregate_peak, std::span<const double> peaks,
                                   const DistortionOptions& options, const std::string& group) {
    if (peaks.size() < 5) throw DataError("distortion factor needs at least 5 individual peaks");
    if (!(aggregate_peak > 0.0)) throw std::invalid_argument("aggregate peak must be positive");

    DistortionReport r;
    r.group = group;
    r.aggregate_peak = aggregate_peak;
    r.individual = summarize_peaks(peaks);
    if (r.individual.median == 0.0) throw DataError("median individual peak is zero");
    r.distortion = aggregate_peak / r.individual.median;

    if (options.bootstrap > 0) {
        std::vector<double> medians(options.bootstrap);
        std::vector<double> sample(peaks.size());
        std::uniform_int_distribution<std::size_t> pick(0, peaks.size() - 1);
        for (std::size_t b = 0; b < options.bootstrap; ++b) {
            Engine eng = make_engine(options.seed, "median-bootstrap", b);
            for (auto& v : sample) v = peaks[pick(eng)];
            medians[b] = stats::median(sample);
        }
        r.ci_low = stats::quantile(medians, 0.025);
        r.ci_high = stats::quantile(medians, 0.975);
    }

    if (options.subsample_size > 0 && options.stability_window) {
        if (options.subsample_size > peaks.size())
            throw std::invalid_argument("subsample larger than the peak set");
        const auto [lo, hi] = *options.stability_window;
        const std::size_t rounds = std::max<std::size_t>(options.bootstrap, 1);
        std::size_t inside = 0;
        std::vector<double> pool(peaks.begin(), peaks.end());
        for (std::size_t b = 0; b < rounds; ++b) {
            Engine eng = make_engine(options.seed, "median-subsample", b);
            std::vector<double> sub;
            std::sample(pool.begin(), pool.end(), std::back_inserter(sub), options.subsample_size, eng);
            const double m = stats::median(sub);
            if (m >= lo && m <= hi) ++inside;
        }
        r.stability_fraction = static_cast<double>(inside) / static_cast<double>(rounds);
    }
    return r;
}

SelectionIdentity selection_identity_check(std::span<const PopulationUnit> population) {
    long double w_total = 0, w_surv = 0, peak_total = 0, peak_surv = 0;
    for (const auto& u : population) {
        if (!(u.weight > 0.0) || !std::isfinite(u.peak))
            throw std::invalid_argument("population units need finite peaks and positive weights");
        w_total += u.weight;
        peak_total += static_cast<long double>(u.weight) * u.peak;
        if (u.survived) {
            w_surv += u.weight;
            peak_surv += static_cast<long double>(u.weight) * u.peak;
        }
    }
    if (w_surv <= 0) throw DataError("selection identity needs at least one survivor");

    const long double p = w_surv / w_total;
    const long double mean_all = peak_total / w_total;
    const long double mean_surv = peak_surv / w_surv;
    // Population covariance of (n*, S).
    long double cov = 0;
    for (const auto& u : population)
        cov += static_cast<long double>(u.weight) * (u.peak - mean_all) * ((u.survived ? 1.0L : 0.0L) - p);
    cov /= w_total;

    SelectionIdentity s;
    s.lhs = static_cast<double>(mean_surv - mean_all);
    s.rhs = static_cast<double>(cov / p);
    s.abs_diff = static_cast<double>(std::fabs((mean_surv - mean_all) - cov / p));
    s.survival_rate = static_cast<double>(p);
    return s;
}

NonparametricCheck nonparametric_distortion_check(std::span<const PopulationUnit> population) {
    NonparametricCheck out;
    out.identity = selection_identity_check(population);

    std::vector<PopulationUnit> sorted(population.begin(), population.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.peak < b.peak; });
    long double w_total = 0, w_surv = 0;
    for (const auto& u : sorted) {
        w_total += u.weight;
        if (u.survived) w_surv += u.weight;
    }
    bool dominated = true;
    long double cdf_all = 0, cdf_surv = 0;
    constexpr long double kSlack = 1e-15L;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j].peak == sorted[i].peak) {
            cdf_all += sorted[j].weight;
            if (sorted[j].survived) cdf_surv += sorted[j].weight;
            ++j;
        }
        if (cdf_surv / w_surv > cdf_all / w_total + kSlack) dominated = false;
        i = j;
    }
    out.dominance = dominated;
    if (dominated && out.identity.lhs < -1e-12 * std::max(1.0, std::abs(out.identity.rhs)))
        throw std::logic_error("dominance holds but the selection shift is negative");
    return out;
}

SelectionSummary selection_summary(std::span<const double> peaks, std::span<const int> n_max,
                                   std::optional<double> n_ref, const std::string& dataset) {
    if (peaks.size() != n_max.size()) throw std::invalid_argument("peaks and n_max differ in length");
    if (peaks.size() < 2) throw DataError("selection summary needs at least 2 users");
    std::vector<double> lengths(n_max.begin(), n_max.end());
    const double ref = n_ref ? *n_ref : stats::median(lengths);

    std::vector<double> survived(peaks.size());
    for (std::size_t i = 0; i < peaks.size(); ++i) survived[i] = n_max[i] >= ref ? 1.0 : 0.0;

    SelectionSummary s;
    s.dataset = dataset;
    s.n = peaks.size();
    s.n_ref = ref;
    s.sigma = stats::stddev(peaks, stats::VarianceConvention::Population);
    s.s_bar = stats::mean(survived);
    s.rho = stats::pearson(peaks, survived);
    return s;
}

PooledResult pooled_distortion(std::span<const SelectionSummary> summaries) {
    if (summaries.empty()) throw std::invalid_argument("pooled estimator needs at least one dataset");
    double N = 0.0;
    for (const auto& s : summaries) {
        if (!(s.rho >= -1.0 && s.rho <= 1.0) || !(s.sigma >= 0.0) || !(s.s_bar >= 0.0 && s.s_bar <= 1.0) ||
            s.n == 0)
            throw std::invalid_argument("selection summary outside its domain");
        if (s.s_bar == 0.0) throw std::invalid_argument("mean survival of zero in dataset '" + s.dataset + "'");
        N += static_cast<double>(s.n);
    }

    PooledResult r;
    double max_signal = 0.0, max_null = 0.0;
    bool censored = false;
    for (const auto& s : summaries) {
        const double odds = (1.0 - s.s_bar) / s.s_bar;
        if (s.s_bar < 1.0) censored = true;
        r.delta_hat += (static_cast<double>(s.n) / N) * s.rho * s.sigma * std::sqrt(odds);
        max_signal = std::max(max_signal, s.rho * s.rho * s.sigma * s.sigma * odds);
        max_null = std::max(max_null, s.sigma * s.sigma * odds);
    }
    r.variance_bound = max_signal / N;
    r.null_variance_bound = max_null / N;
    if (!censored) r.note = "no censoring";
    if (r.null_variance_bound > 0.0) {
        r.z = r.delta_hat / std::sqrt(r.null_variance_bound);
        r.p_one_sided = stats::normal_sf(r.z);
    }
    return r;
}

namespace {

double median_range(const std::vector<std::vector<double>>& by_group) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& g : by_group) {
        if (g.empty()) continue;
        const double m = stats::median(g);
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    return hi - lo;
}

}  // namespace

WithinUserPermutation within_user_permutation(std::span<const UserGroupPeak> peaks, std::size_t B,
                                              std::uint64_t seed, unsigned jobs) {
    std::vector<UserGroupPeak> rows(peaks.begin(), peaks.end());
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        return std::tie(a.user_id, a.group, a.peak) < std::tie(b.user_id, b.group, b.peak);
    });
    std::map<std::string, std::size_t> group_index;
    for (const auto& r : rows) group_index.emplace(r.group, 0);
    if (group_index.size() < 2) throw std::invalid_argument("within-user permutation needs >= 2 groups");
    std::size_t gi = 0;
    for (auto& [name, idx] : group_index) idx = gi++;

    // Contiguous row ranges per user.
    std::vector<std::pair<std::size_t, std::size_t>> users;
    for (std::size_t i = 0; i < rows.size();) {
        std::size_t j = i;
        while (j < rows.size() && rows[j].user_id == rows[i].user_id) ++j;
        users.emplace_back(i, j);
        i = j;
    }

    WithinUserPermutation out;
    std::vector<std::vector<double>> by_group(group_index.size());
    for (const auto& r : rows) by_group[group_index[r.group]].push_back(r.peak);
    out.r_obs = median_range(by_group);

    std::vector<std::pair<std::size_t, std::size_t>> multi;
    for (const auto& u : users)
        if (u.second - u.first >= 2) multi.push_back(u);
    out.multi_group_users = multi.size();
    if (multi.empty()) {
        out.exchangeable = false;
        out.p_value = 1.0;
        return out;
    }

    std::vector<std::uint8_t> at_most(B, 0);
    parallel_for(B, jobs, [&](std::size_t b) {
        Engine eng = make_engine(seed, "within-user", b);
        std::vector<double> values(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) values[i] = rows[i].peak;
        for (const auto& [lo, hi] : multi) std::shuffle(values.begin() + lo, values.begin() + hi, eng);
        std::vector<std::vector<double>> g(group_index.size());
        for (std::size_t i = 0; i < rows.size(); ++i) g[group_index.at(rows[i].group)].push_back(values[i]);
        at_most[b] = median_range(g) <= out.r_obs;
    });
    out.permutations = B;
    out.p_value = B ? static_cast<double>(std::accumulate(at_most.begin(), at_most.end(), std::size_t{0})) /
                          static_cast<double>(B)
                    : 1.0;
    return out;
}

}  // namespace peakshift
