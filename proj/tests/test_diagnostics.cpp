#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "peakshift/diagnostics.hpp"
#include "peakshift/error.hpp"

using namespace peakshift;

TEST_CASE("distortion factor") {
    const std::vector<double> peaks{9.0, 10.0, 11.2, 12.0, 14.0};
    auto r = distortion_factor(34.2, peaks);
    CHECK(r.individual.median == doctest::Approx(11.2));
    CHECK(r.distortion == doctest::Approx(3.05).epsilon(0.002));
    CHECK(r.ci_low <= r.individual.median);
    CHECK(r.ci_high >= r.individual.median);

    CHECK(distortion_factor(65.7, std::vector<double>{5, 9.6, 9.6, 12, 30}).distortion ==
          doctest::Approx(6.84).epsilon(0.002));
    CHECK(distortion_factor(11.2, peaks).distortion == doctest::Approx(1.0));

    CHECK_THROWS_AS(distortion_factor(10.0, std::vector<double>{1, 2, 3, 4}), DataError);
    CHECK_THROWS_AS(distortion_factor(10.0, std::vector<double>{0, 0, 0, 1, 2}), DataError);
    CHECK_THROWS(distortion_factor(0.0, peaks));
}

TEST_CASE("distortion is scale-equivariant and reproducible") {
    std::mt19937_64 eng(4);
    std::lognormal_distribution<double> ln(std::log(12.0), 0.6);
    std::vector<double> peaks(300);
    for (auto& p : peaks) p = ln(eng);
    DistortionOptions opt;
    opt.subsample_size = 50;
    opt.stability_window = std::pair{9.0, 14.0};
    const auto a = distortion_factor(30.0, peaks, opt);
    std::vector<double> scaled(peaks);
    for (auto& p : scaled) p *= 2.5;
    CHECK(distortion_factor(75.0, scaled, opt).distortion == doctest::Approx(a.distortion));
    const auto b = distortion_factor(30.0, peaks, opt);
    CHECK(a.ci_low == b.ci_low);
    CHECK(a.ci_high == b.ci_high);
    REQUIRE(a.stability_fraction);
    CHECK(*a.stability_fraction == *b.stability_fraction);
    CHECK(*a.stability_fraction > 0.5);
    CHECK(a.individual.skewness);
}

TEST_CASE("selection identity") {
    const std::vector<PopulationUnit> two{{5, false, 1}, {20, true, 1}};
    auto r = selection_identity_check(two);
    CHECK(r.lhs == doctest::Approx(7.5));
    CHECK(r.rhs == doctest::Approx(7.5));
    CHECK(r.abs_diff < 1e-12);

    const std::vector<PopulationUnit> all{{5, true, 1}, {9, true, 2}, {20, true, 1}};
    r = selection_identity_check(all);
    CHECK(std::abs(r.lhs) < 1e-12);
    CHECK(std::abs(r.rhs) < 1e-12);

    CHECK_THROWS_AS(selection_identity_check(std::vector<PopulationUnit>{{5, false, 1}}), DataError);

    // hand-built 4-point law; oracle by direct enumeration
    const std::vector<PopulationUnit> four{{2, false, 0.1}, {4, true, 0.2}, {7, false, 0.3}, {11, true, 0.4}};
    r = selection_identity_check(four);
    const double e_all = 2 * .1 + 4 * .2 + 7 * .3 + 11 * .4;
    const double e_surv = (4 * .2 + 11 * .4) / .6;
    CHECK(r.lhs == doctest::Approx(e_surv - e_all));
    CHECK(r.abs_diff < 1e-12);
    CHECK(r.survival_rate == doctest::Approx(0.6));
}

TEST_CASE("selection identity on random populations") {
    std::mt19937_64 eng(17);
    for (int rep = 0; rep < 500; ++rep) {
        const std::size_t n = 2 + eng() % 49;
        std::vector<PopulationUnit> pop(n);
        for (auto& u : pop) {
            u.peak = (eng() % 2) ? double(1 + eng() % 30) : 1.0 + 60.0 * std::generate_canonical<double, 53>(eng);
            u.survived = eng() % 3 != 0;
            u.weight = 0.1 + std::generate_canonical<double, 53>(eng);
        }
        pop[0].survived = true;
        CHECK(selection_identity_check(pop).abs_diff < 1e-12);
    }
}

TEST_CASE("independent selection averages to zero") {
    std::vector<double> peaks(20);
    std::iota(peaks.begin(), peaks.end(), 1.0);
    std::vector<bool> s(20, false);
    std::fill(s.begin(), s.begin() + 10, true);
    std::mt19937_64 eng(8);
    double total = 0;
    const int reps = 4000;
    for (int r = 0; r < reps; ++r) {
        std::shuffle(s.begin(), s.end(), eng);
        std::vector<PopulationUnit> pop;
        for (std::size_t i = 0; i < 20; ++i) pop.push_back({peaks[i], s[i], 1.0});
        total += selection_identity_check(pop).lhs;
    }
    CHECK(std::abs(total / reps) < 0.15);
}

TEST_CASE("dominance check") {
    // survivors are the upper half: dominated CDF
    std::vector<PopulationUnit> pop;
    for (int i = 1; i <= 10; ++i) pop.push_back({double(i), i > 5, 1.0});
    auto r = nonparametric_distortion_check(pop);
    CHECK(r.dominance);
    CHECK(r.identity.lhs >= 0);

    pop.clear();
    for (int i = 1; i <= 10; ++i) pop.push_back({double(i), true, 1.0});
    for (int i = 1; i <= 10; ++i) pop.push_back({double(i), false, 1.0});
    r = nonparametric_distortion_check(pop);
    CHECK(r.dominance);
    CHECK(std::abs(r.identity.lhs) < 1e-12);

    pop.clear();
    for (int i = 1; i <= 10; ++i) pop.push_back({double(i), i <= 5, 1.0});
    CHECK(!nonparametric_distortion_check(pop).dominance);
}

TEST_CASE("selection summary") {
    const std::vector<double> peaks{2, 4, 6, 8};
    const std::vector<int> nmax{10, 20, 30, 40};
    const auto s = selection_summary(peaks, nmax, 25.0, "d");
    CHECK(s.s_bar == 0.5);
    CHECK(s.rho == doctest::Approx(2 / std::sqrt(5.0)));
    CHECK(s.sigma == doctest::Approx(std::sqrt(5.0)));
    CHECK(s.n == 4);
    // default reference: median n_max
    CHECK(selection_summary(peaks, nmax).n_ref == 25.0);
}

TEST_CASE("pooled estimator") {
    SelectionSummary one{"a", 0.5, 10.0, 0.5, 100, 0};
    auto r = pooled_distortion(std::vector{one});
    CHECK(r.delta_hat == doctest::Approx(5.0));
    CHECK(r.variance_bound == doctest::Approx(25.0 / 100));

    std::vector<SelectionSummary> zero{{"a", 0, 3, 0.4, 50, 0}, {"b", 0, 9, 0.7, 80, 0}};
    r = pooled_distortion(zero);
    CHECK(r.delta_hat == 0.0);
    CHECK(r.p_one_sided == 0.5);

    std::vector<SelectionSummary> none{{"a", 0.3, 3, 1.0, 50, 0}};
    r = pooled_distortion(none);
    CHECK(r.delta_hat == 0.0);
    CHECK(!r.note.empty());

    CHECK_THROWS(pooled_distortion(std::vector<SelectionSummary>{}));
    CHECK_THROWS(pooled_distortion(std::vector<SelectionSummary>{{"a", 0.3, 3, 0.0, 50, 0}}));
    CHECK_THROWS(pooled_distortion(std::vector<SelectionSummary>{{"a", 1.3, 3, 0.5, 50, 0}}));

    std::vector<SelectionSummary> mix{{"a", 0.2, 5, 0.5, 40, 0}, {"b", 0.4, 8, 0.3, 60, 0}, {"c", 0.1, 2, 0.8, 100, 0}};
    const auto base = pooled_distortion(mix);
    CHECK(base.delta_hat > 0);
    std::reverse(mix.begin(), mix.end());
    CHECK(pooled_distortion(mix).delta_hat == doctest::Approx(base.delta_hat));
    // splitting a dataset into two identical halves
    auto split = mix;
    split[0].n /= 2;
    split.push_back(split[0]);
    CHECK(pooled_distortion(split).delta_hat == doctest::Approx(base.delta_hat));
}

TEST_CASE("within-user permutation") {
    std::vector<UserGroupPeak> single{{"u1", "a", 5}, {"u2", "b", 9}, {"u3", "a", 6}};
    auto r = within_user_permutation(single, 200, 1);
    CHECK(!r.exchangeable);
    CHECK(r.p_value == 1.0);
    CHECK_THROWS(within_user_permutation(std::vector<UserGroupPeak>{{"u", "a", 1}}, 100, 1));

    // planted group effect with little noise
    std::mt19937_64 eng(5);
    std::normal_distribution<double> noise(0, 0.5);
    std::vector<UserGroupPeak> planted;
    for (int u = 0; u < 60; ++u) {
        const std::string id = "u" + std::to_string(u);
        planted.push_back({id, "a", 10 + noise(eng)});
        planted.push_back({id, "b", 14 + noise(eng)});
    }
    r = within_user_permutation(planted, 2000, 3);
    CHECK(r.exchangeable);
    CHECK(r.multi_group_users == 60);
    // the permuted range is almost always smaller than the planted one
    CHECK(r.p_value > 0.99);

    // determinism and order invariance
    auto shuffled = planted;
    std::shuffle(shuffled.begin(), shuffled.end(), eng);
    const auto x = within_user_permutation(planted, 500, 9, 1);
    const auto y = within_user_permutation(shuffled, 500, 9, 3);
    CHECK(x.p_value == y.p_value);
    CHECK(x.r_obs == y.r_obs);
}

TEST_CASE("within-user permutation p is roughly uniform under exchangeability") {
    std::mt19937_64 eng(21);
    std::lognormal_distribution<double> ln(std::log(12.0), 0.5);
    std::vector<double> ps;
    for (int rep = 0; rep < 120; ++rep) {
        std::vector<UserGroupPeak> v;
        for (int u = 0; u < 40; ++u) {
            const std::string id = "u" + std::to_string(u);
            for (const char* g : {"a", "b", "c"}) v.push_back({id, g, ln(eng)});
        }
        ps.push_back(within_user_permutation(v, 200, rep).p_value);
    }
    std::sort(ps.begin(), ps.end());
    double ks = 0;
    for (std::size_t i = 0; i < ps.size(); ++i)
        ks = std::max({ks, std::abs(ps[i] - double(i) / ps.size()), std::abs(ps[i] - double(i + 1) / ps.size())});
    CHECK(ks < 0.2);
}
