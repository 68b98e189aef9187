#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <sstream>

#include "peakshift/engagement.hpp"
#include "peakshift/error.hpp"

using namespace peakshift;

namespace {

IngestResult ingest(const std::string& text) {
    std::istringstream in(text);
    return ingest_events(in);
}

ExposureSeries series_of(std::vector<std::uint8_t> e, std::string user = "u") {
    ExposureSeries s{std::move(user), "g", std::move(e), {}};
    s.raw_ratings.assign(s.engagement.size(), 0.0);
    return s;
}

}  // namespace

TEST_CASE("ingest accepts valid rows and rejects out-of-range ratings") {
    auto r = ingest("user_id,item_id,group,rating,timestamp\nu1,i1,g,5,1\nu1,i2,g,3,2\nu2,i1,g,4,\n");
    CHECK(r.events.size() == 3);
    CHECK(r.report.rejected == 0);
    CHECK(r.report.distinct_users == 2);
    CHECK(r.report.distinct_groups == 1);

    r = ingest("user_id,item_id,group,rating,timestamp\nu1,i1,g,7.2,1\nu1,i2,g,3,2\n");
    CHECK(r.events.size() == 1);
    CHECK(r.report.rejected == 1);
    CHECK(r.report.reject_samples.size() == 1);
}

TEST_CASE("duplicate occurrences are kept") {
    const auto r = ingest("user_id,item_id,group,rating,timestamp\nu1,i1,g,5,1\nu1,i1,g,5,1\nu1,i1,g,2,3\n");
    CHECK(r.events.size() == 3);
    const auto s = build_exposure_series(r.events);
    REQUIRE(s.size() == 1);
    CHECK(s[0].length() == 3);
}

TEST_CASE("missing header or column is a schema error") {
    CHECK_THROWS_AS(ingest(""), SchemaError);
    try {
        ingest("user_id,item_id,group,timestamp\nu1,i1,g,1\n");
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("rating") != std::string::npos);
    }
    ColumnSchema renamed;
    renamed.rating = "stars";
    std::istringstream in("user_id,item_id,group,stars,timestamp\nu1,i1,g,4,1\n");
    CHECK(ingest_events(in, renamed).events.size() == 1);
}

TEST_CASE("header-only file yields no series") {
    const auto r = ingest("user_id,item_id,group,rating,timestamp\n");
    CHECK(r.events.empty());
    CHECK(build_exposure_series(r.events).empty());
}

TEST_CASE("thresholding and ordering") {
    auto r = ingest("user_id,item_id,group,rating,timestamp\nu,a,g,4,30\nu,b,g,5,10\nu,c,g,3,20\n");
    auto s = build_exposure_series(r.events);
    REQUIRE(s.size() == 1);
    CHECK(s[0].engagement == std::vector<std::uint8_t>{1, 0, 1});
    CHECK(s[0].raw_ratings == std::vector<double>{5, 3, 4});

    s = build_exposure_series(r.events, std::nullopt, 0.0001);
    CHECK(std::all_of(s[0].engagement.begin(), s[0].engagement.end(), [](auto v) { return v == 1; }));

    // ties keep input order; missing timestamps go last
    r = ingest("user_id,item_id,group,rating,timestamp\nu,a,g,1,\nu,b,g,5,7\nu,c,g,2,7\n");
    s = build_exposure_series(r.events);
    CHECK(s[0].raw_ratings == std::vector<double>{5, 2, 1});
}

TEST_CASE("interleaved users keep their own counts") {
    std::mt19937_64 eng(3);
    std::vector<std::string> rows;
    std::map<std::string, int> expect;
    for (int i = 0; i < 200; ++i) {
        const std::string u = "u" + std::to_string(eng() % 7);
        const std::string g = (eng() % 2) ? "x" : "y";
        ++expect[g + "/" + u];
        rows.push_back(u + ",i" + std::to_string(i) + "," + g + ",4," + std::to_string(eng() % 50));
    }
    std::shuffle(rows.begin(), rows.end(), eng);
    std::string text = "user_id,item_id,group,rating,timestamp\n";
    for (const auto& r : rows) text += r + "\n";
    const auto r = ingest(text);
    const auto s = build_exposure_series(r.events);
    std::map<std::string, int> got;
    for (const auto& x : s) got[x.group + "/" + x.user_id] = static_cast<int>(x.length());
    CHECK(got == expect);
    CHECK(std::is_sorted(s.begin(), s.end(), [](const auto& a, const auto& b) {
        return std::tie(a.group, a.user_id) < std::tie(b.group, b.user_id);
    }));

    const auto only_x = build_exposure_series(r.events, std::string("x"));
    CHECK(std::all_of(only_x.begin(), only_x.end(), [](const auto& x) { return x.group == "x"; }));
}

TEST_CASE("smoothing with truncated windows") {
    const std::vector<double> ones{1, 1, 1, 1, 1};
    CHECK(moving_average(ones, 5) == ones);
    const std::vector<double> spike{0, 0, 1, 0, 0};
    const auto m = moving_average(spike, 5);
    const std::vector<double> want{1.0 / 3, 1.0 / 4, 1.0 / 5, 1.0 / 4, 1.0 / 3};
    for (std::size_t i = 0; i < 5; ++i) CHECK(m[i] == doctest::Approx(want[i]));
    CHECK(moving_average(spike, 1) == spike);
    CHECK_THROWS(moving_average(spike, 4));
    CHECK_THROWS(moving_average(spike, 0));

    // values stay inside the window's range
    std::mt19937_64 eng(9);
    std::vector<double> x(40);
    for (auto& v : x) v = double(eng() % 2);
    const auto y = moving_average(x, 5);
    REQUIRE(y.size() == x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::size_t lo = i >= 2 ? i - 2 : 0, hi = std::min(x.size() - 1, i + 2);
        const auto [mn, mx] = std::minmax_element(x.begin() + lo, x.begin() + hi + 1);
        CHECK(y[i] >= *mn);
        CHECK(y[i] <= *mx);
    }
}

TEST_CASE("aggregate curve is the survival-weighted mean") {
    const std::vector<ExposureSeries> two{series_of({1, 1}, "a"), series_of({0}, "b")};
    auto c = aggregate_curve(two, 10);
    REQUIRE(c.bins.size() == 2);
    CHECK(c.bins[0].mean == 0.5);
    CHECK(c.bins[0].count == 2);
    CHECK(c.bins[1].mean == 1.0);
    CHECK(c.bins[1].count == 1);

    c = aggregate_curve(two, 10, 2);
    CHECK(c.bins.size() == 1);
    CHECK_THROWS_AS(aggregate_curve(two, 10, 3), DataError);

    const std::vector<ExposureSeries> same{series_of({1, 0, 1}, "a"), series_of({1, 0, 1}, "b")};
    c = aggregate_curve(same, 10);
    CHECK(c.bins[0].mean == 1.0);
    CHECK(c.bins[1].mean == 0.0);
    CHECK(c.bins[2].mean == 1.0);

    // enumerated oracle on a random population
    std::mt19937_64 eng(5);
    std::vector<ExposureSeries> pop;
    for (int u = 0; u < 30; ++u) {
        std::vector<std::uint8_t> e(1 + eng() % 25);
        for (auto& v : e) v = eng() % 2;
        pop.push_back(series_of(e, "u" + std::to_string(u)));
    }
    c = aggregate_curve(pop, 30);
    for (const auto& b : c.bins) {
        double num = 0, den = 0;
        for (const auto& s : pop)
            if (s.length() >= std::size_t(b.exposure)) {
                den += 1;
                num += s.engagement[b.exposure - 1];
            }
        CHECK(b.mean == doctest::Approx(num / den));
        CHECK(b.count == std::size_t(den));
    }
    for (std::size_t i = 1; i < c.bins.size(); ++i) CHECK(c.bins[i].exposure > c.bins[i - 1].exposure);
}

TEST_CASE("series and events round-trip through CSV") {
    auto r = ingest("user_id,item_id,group,rating,timestamp\n\"u,1\",a,\"Sci \"\"Fi\"\"\",4.5,3\nu2,b,g,1,\n");
    std::ostringstream ev;
    write_events_csv(ev, r.events);
    const auto r2 = ingest(ev.str());
    REQUIRE(r2.events.size() == 2);
    CHECK(r2.events[0].user_id == "u,1");
    CHECK(r2.events[0].group == "Sci \"Fi\"");
    CHECK(!r2.events[1].timestamp);

    const auto s = build_exposure_series(r.events);
    std::ostringstream out;
    write_series_csv(out, s);
    std::istringstream in(out.str());
    const auto back = read_series_csv(in);
    REQUIRE(back.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(back[i].user_id == s[i].user_id);
        CHECK(back[i].group == s[i].group);
        CHECK(back[i].engagement == s[i].engagement);
        CHECK(back[i].raw_ratings == s[i].raw_ratings);
    }
}
