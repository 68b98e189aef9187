#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "peakshift/cli.hpp"

using namespace peakshift;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("peakshift_cli_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

void write(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("ingest exit codes") {
    TempDir t("ingest");
    write(t / "ok.csv", "user_id,item_id,group,rating,timestamp\nu1,i1,g,5,1\nu1,i2,g,3,2\nu2,i1,g,4,1\n");
    auto r = run({"--out", t / "o1", "ingest", "--input", t / "ok.csv"});
    CHECK(r.code == 0);
    const auto report = nlohmann::json::parse(slurp(t / "o1/ingest_report.json"));
    CHECK(report["accepted"] == 3);
    CHECK(report["series"] == 2);
    CHECK(fs::exists(t / "o1/series.csv"));
    CHECK(fs::exists(t / "o1/manifest.json"));

    write(t / "bad.csv", "user_id,item_id,group,timestamp\nu1,i1,g,1\n");
    r = run({"--out", t / "o2", "ingest", "--input", t / "bad.csv"});
    CHECK(r.code == 2);
    CHECK(r.err.find("rating") != std::string::npos);

    write(t / "empty.csv", "user_id,item_id,group,rating,timestamp\n");
    r = run({"--out", t / "o3", "ingest", "--input", t / "empty.csv"});
    CHECK(r.code == 0);
    CHECK(nlohmann::json::parse(slurp(t / "o3/ingest_report.json"))["series"] == 0);
}

TEST_CASE("usage and config errors exit with 2") {
    TempDir t("usage");
    CHECK(run({}).code == 2);
    CHECK(run({"explode"}).code == 2);
    CHECK(run({"ingest"}).code == 2);
    write(t / "cfg.json", R"({"unknown_key": 1})");
    const auto r = run({"--config", t / "cfg.json", "--out", t / "o", "power"});
    CHECK(r.code == 2);
    CHECK(r.err.find("unknown_key") != std::string::npos);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("missing input is a module error") {
    TempDir t("missing");
    CHECK(run({"--out", t / "o", "fit", "--input", t / "nope.csv"}).code == 1);
}

TEST_CASE("single-user diagnose reports insufficient population") {
    TempDir t("single");
    std::string csv = "user_id,item_id,group,rating,timestamp\n";
    for (int i = 1; i <= 30; ++i) csv += "u1,i" + std::to_string(i) + ",g," + (i % 3 ? "5" : "2") + "," + std::to_string(i) + "\n";
    write(t / "ev.csv", csv);
    REQUIRE(run({"--out", t / "i", "ingest", "--input", t / "ev.csv"}).code == 0);
    const auto r = run({"--out", t / "d", "diagnose", "--input", t / "i/series.csv"});
    CHECK(r.code == 1);
    CHECK(r.err.find("insufficient population") != std::string::npos);
}

TEST_CASE("diagnose without enough strict users leaves D undefined") {
    TempDir t("fewpeaks");
    std::string csv = "user_id,item_id,group,rating,timestamp\n";
    for (int u = 0; u < 12; ++u)
        for (int i = 1; i <= 20; ++i)
            csv += "u" + std::to_string(u) + ",i" + std::to_string(i) + ",g,5," + std::to_string(i) + "\n";
    write(t / "ev.csv", csv);
    REQUIRE(run({"--out", t / "i", "ingest", "--input", t / "ev.csv"}).code == 0);
    const auto r = run({"--out", t / "d", "diagnose", "--input", t / "i/series.csv"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(slurp(t / "d/distortion.json"));
    CHECK(j[0]["D"].is_null());
    CHECK(j[0].contains("reason"));
}

TEST_CASE("pool and permtest inputs") {
    TempDir t("pool");
    write(t / "s.csv", "dataset,rho,sigma,s_bar,n\na,0.5,10,0.5,100\n");
    REQUIRE(run({"--out", t / "p", "pool", "--input", t / "s.csv"}).code == 0);
    const auto j = nlohmann::json::parse(slurp(t / "p/pooled.json"));
    CHECK(j["delta_hat"].get<double>() == doctest::Approx(5.0));

    write(t / "bad.csv", "dataset,rho,sigma\na,0.5,10\n");
    CHECK(run({"--out", t / "p2", "pool", "--input", t / "bad.csv"}).code == 2);

    write(t / "peaks.csv", "user_id,group,peak\nu1,a,5\nu1,b,9\nu2,a,6\nu2,b,11\n");
    REQUIRE(run({"--out", t / "w", "permtest", "--input", t / "peaks.csv"}).code == 0);
    CHECK(nlohmann::json::parse(slurp(t / "w/within_user.json")).contains("p_value"));
}

TEST_CASE("synth, ingest, diagnose, classify and shrink are reproducible across job counts") {
    TempDir t("determinism");
    write(t / "cfg.json", R"({
        "factorial": {"n_users": 200},
        "fit": {"n_starts": 4},
        "resampling": {"eb_bootstrap": 20, "permutation_B": 100, "distortion_bootstrap": 200},
        "aggregate": {"max_exposure": 400, "min_bin_count": 30}
    })");
    auto pipeline = [&](const std::string& tag, const std::string& jobs) {
        const std::string base = t / tag;
        auto g = [&](std::vector<std::string> extra) {
            std::vector<std::string> a{"--config", t / "cfg.json", "--jobs", jobs, "--seed", "11"};
            a.insert(a.end(), extra.begin(), extra.end());
            return run(a).code;
        };
        REQUIRE(g({"--out", base + "/s", "synth", "--export-cell", "survival"}) == 0);
        REQUIRE(g({"--out", base + "/i", "ingest", "--input", base + "/s/events.csv"}) == 0);
        REQUIRE(g({"--out", base + "/d", "diagnose", "--input", base + "/i/series.csv", "--peaks",
                   base + "/s/true_peaks.csv"}) == 0);
        REQUIRE(g({"--out", base + "/c", "classify", "--input", base + "/i/series.csv"}) == 0);
        REQUIRE(g({"--out", base + "/h", "shrink", "--input", base + "/i/series.csv"}) == 0);
        return base;
    };
    const auto a = pipeline("a", "1");
    const auto b = pipeline("b", "3");
    for (const char* f : {"s/factorial.json", "s/events.csv", "s/true_peaks.csv", "i/series.csv",
                          "d/distortion.json", "c/user_gates.csv", "c/classification.json",
                          "h/shrinkage.csv", "h/shrinkage_summary.json"})
        CHECK_MESSAGE(slurp(a + "/" + f) == slurp(b + "/" + f), f);

    const auto ma = nlohmann::json::parse(slurp(a + "/d/manifest.json"));
    const auto mb = nlohmann::json::parse(slurp(b + "/d/manifest.json"));
    CHECK(ma["outputs"] == mb["outputs"]);
    CHECK(ma["seed"] == 11);
    CHECK(ma["jobs"] == 1);
    CHECK(mb["jobs"] == 3);
    // jobs does not enter the config hash
    CHECK(ma["config_hash"] == mb["config_hash"]);
}
