#include "peakshift/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "peakshift/calibration.hpp"
#include "peakshift/config.hpp"
#include "peakshift/diagnostics.hpp"
#include "peakshift/error.hpp"
#include "peakshift/parallel.hpp"
#include "peakshift/report.hpp"
#include "peakshift/rng.hpp"
#include "peakshift/shrinkage.hpp"
#include "peakshift/stats.hpp"

namespace fs = std::filesystem;

namespace peakshift {

namespace {

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Safe file-name fragment for a group label.
std::string slug(const std::string& group) {
    std::string s;
    for (char c : group) s.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_');
    return s.empty() ? "_" : s;
}

// Output directory, stage timings and the manifest.
class Run {
public:
    Run(std::string command, RunConfig config) : command_(std::move(command)), config_(std::move(config)) {
        fs::create_directories(config_.output_dir);
    }

    const RunConfig& config() const { return config_; }

    fs::path path(const std::string& name) const { return fs::path(config_.output_dir) / name; }

    void write(const std::string& name, const std::string& content) {
        std::ofstream out(path(name), std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path(name).string());
        out << content;
        if (std::find(outputs_.begin(), outputs_.end(), name) == outputs_.end()) outputs_.push_back(name);
    }

    void write_json(const std::string& name, const ordered_json& j) { write(name, j.dump(2) + "\n"); }

    template <class F>
    auto stage(const std::string& name, F&& body) {
        const auto t0 = std::chrono::steady_clock::now();
        auto finish = [&] {
            timings_.emplace_back(name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        };
        if constexpr (std::is_void_v<decltype(body())>) {
            body();
            finish();
        } else {
            auto r = body();
            finish();
            return r;
        }
    }

    void write_manifest() {
        // Worker count and output location do not change results.
        ordered_json canon = config_to_json(config_);
        canon.erase("jobs");
        canon.erase("output_dir");
        const std::string cfg = canon.dump();
        ordered_json stages = ordered_json::array();
        for (const auto& [n, s] : timings_) stages.push_back({{"stage", n}, {"seconds", s}});
        ordered_json files = ordered_json::array();
        for (const auto& name : outputs_) {
            const std::string data = read_file(path(name));
            files.push_back({{"file", name}, {"bytes", data.size()}, {"fnv1a64", hex64(fnv1a64(data))}});
        }
        ordered_json m = {{"tool", "peakshift"},
                          {"version", kToolVersion},
                          {"command", command_},
                          {"config_hash", hex64(fnv1a64(cfg))},
                          {"seed", config_.seed},
                          {"jobs", config_.jobs},
                          {"stages", stages},
                          {"outputs", files}};
        std::ofstream(path("manifest.json"), std::ios::binary) << m.dump(2) << "\n";
    }

private:
    std::string command_;
    RunConfig config_;
    std::vector<std::pair<std::string, double>> timings_;
    std::vector<std::string> outputs_;
};

std::ifstream open_input(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DataError("cannot open input file '" + p + "'");
    return in;
}

std::vector<ExposureSeries> load_series(const std::string& p) {
    auto in = open_input(p);
    return read_series_csv(in);
}

// Groups in sorted order, plus "all" when there are several.
std::vector<std::pair<std::string, std::vector<ExposureSeries>>> by_group(
    const std::vector<ExposureSeries>& series) {
    std::map<std::string, std::vector<ExposureSeries>> m;
    for (const auto& s : series) m[s.group].push_back(s);
    std::vector<std::pair<std::string, std::vector<ExposureSeries>>> out(m.begin(), m.end());
    if (out.size() > 1) out.emplace_back("all", series);
    return out;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw SchemaError("missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    }
    bool has(const std::string& name) const {
        return std::find(header.begin(), header.end(), name) != header.end();
    }
};

CsvTable read_table(const std::string& p) {
    auto in = open_input(p);
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("missing header row in '" + p + "'");
    auto strip = [](std::string& s) {
        if (!s.empty() && s.back() == '\r') s.pop_back();
    };
    strip(line);
    t.header = split_csv_line(line);
    while (std::getline(in, line)) {
        strip(line);
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() < t.header.size()) throw SchemaError("short row in '" + p + "'");
        t.rows.push_back(std::move(f));
    }
    return t;
}

double to_number(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw SchemaError("column '" + what + "' holds a non-numeric value '" + s + "'");
    }
}

std::string curve_csv(const BinnedCurve& curve, const std::optional<ModelParams>& fit) {
    std::ostringstream o;
    o << "n,aggregate_mean,fit_value,bin_count\n";
    for (const auto& b : curve.bins) {
        o << b.exposure << ',' << format_double(b.mean) << ',';
        if (fit) o << format_double(evaluate(*fit, b.exposure));
        o << ',' << b.count << '\n';
    }
    return o.str();
}

FitConfig aggregate_fit_config(const RunConfig& c, const BinnedCurve& curve) {
    FitConfig f = c.fit;
    f.peak_domain = PeakDomain{double(curve.bins.front().exposure), double(curve.bins.back().exposure)};
    return f;
}

// Per-user strict classification shared by classify, diagnose and shrink.
std::vector<std::optional<StrictGateReport>> classify_users(const std::vector<ExposureSeries>& series,
                                                            const RunConfig& c) {
    std::vector<std::optional<StrictGateReport>> reports(series.size());
    const UserPipeline pipeline = c.user_pipeline();
    parallel_for(series.size(), c.jobs, [&](std::size_t i) {
        reports[i] = classify_series(series[i], pipeline, strict_variant());
    });
    return reports;
}

// ---------------------------------------------------------------- commands

void cmd_ingest(Run& run, const std::string& input) {
    const auto& c = run.config();
    auto in = open_input(input);
    const IngestResult ingested = run.stage("ingest", [&] { return ingest_events(in, c.schema); });
    const auto series = run.stage("series", [&] {
        return build_exposure_series(ingested.events, c.group, c.engagement_threshold);
    });
    std::ostringstream csv;
    write_series_csv(csv, series);
    run.write("series.csv", csv.str());
    const auto& r = ingested.report;
    run.write_json("ingest_report.json", {{"rows_read", r.rows_read},
                                          {"accepted", r.accepted},
                                          {"rejected", r.rejected},
                                          {"distinct_users", r.distinct_users},
                                          {"distinct_groups", r.distinct_groups},
                                          {"series", series.size()},
                                          {"reject_samples", r.reject_samples}});
}

void cmd_fit(Run& run, const std::string& input) {
    const auto& c = run.config();
    const auto series = load_series(input);
    ordered_json report = ordered_json::array();
    run.stage("fit", [&] {
        for (const auto& [group, members] : by_group(series)) {
            const BinnedCurve curve = aggregate_curve(members, c.aggregate.max_exposure, c.aggregate.min_bin_count);
            const auto pts = to_points(curve, c.aggregate.weight_by_count);
            const ModelFits fits = fit_all(pts, aggregate_fit_config(c, curve));
            const auto& hill = fits.at(ModelKind::HillExponential);
            report.push_back({{"group", group},
                              {"bins", curve.bins.size()},
                              {"best_by_aic", std::string(to_string(fits.best_by_aic()))},
                              {"lrt_vs_monotonic", to_json(compare_lrt(hill, fits.at(ModelKind::MonotonicDecay)))},
                              {"lrt_vs_flat", to_json(compare_lrt(hill, fits.at(ModelKind::Flat)))},
                              {"fits", to_json(fits)}});
            run.write("aggregate_curve_" + slug(group) + ".csv", curve_csv(curve, hill.params));
        }
    });
    run.write_json("fits.json", report);
}

void cmd_classify(Run& run, const std::string& input) {
    const auto& c = run.config();
    const auto series = load_series(input);
    const auto reports = run.stage("user_gates", [&] { return classify_users(series, c); });

    std::ostringstream csv;
    csv << "user_id,group,length,eligible,lrt_p,delta_aic,r2,n_star,interior,decline,hillexp_bic,purehill_bic";
    for (const auto& v : c.variants) csv << ",pass_" << v.name;
    csv << ",failure\n";
    std::map<std::string, std::vector<std::size_t>> pass_counts, eligible_counts;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const auto& r = reports[i];
        csv << csv_field(s.user_id) << ',' << csv_field(s.group) << ',' << s.length() << ',' << (r ? 1 : 0);
        auto& pc = pass_counts[s.group];
        auto& ec = eligible_counts[s.group];
        pc.resize(c.variants.size());
        ec.resize(1);
        if (r) {
            ++ec[0];
            csv << ',' << format_double(r->lrt_p) << ',' << format_double(r->delta_aic) << ','
                << format_double(r->r2) << ',' << (r->n_star ? format_double(*r->n_star) : "") << ','
                << (r->interior ? 1 : 0) << ',' << format_double(r->decline) << ','
                << format_double(r->hillexp_bic) << ',' << format_double(r->purehill_bic);
            for (std::size_t v = 0; v < c.variants.size(); ++v) {
                const bool ok = passes(*r, c.variants[v]);
                pc[v] += ok;
                csv << ',' << (ok ? 1 : 0);
            }
            csv << ',' << csv_field(r->failure) << '\n';
        } else {
            csv << ",,,,,,,,";
            for (std::size_t v = 0; v < c.variants.size(); ++v) csv << ",0";
            csv << ",too_short\n";
        }
    }
    run.write("user_gates.csv", csv.str());

    ordered_json groups = ordered_json::array();
    run.stage("aggregate_class", [&] {
        const AggregatePipeline pipeline = c.aggregate_pipeline();
        for (const auto& [group, members] : by_group(series)) {
            ordered_json g = {{"group", group}, {"users", members.size()}};
            try {
                g["aggregate"] = to_json(assess_aggregate(members, c.aggregate, pipeline, c.jobs));
            } catch (const DataError& e) {
                g["aggregate"] = {{"label", nullptr}, {"error", e.what()}};
            }
            if (group != "all") {
                ordered_json rates = ordered_json::object();
                const std::size_t el = eligible_counts[group][0];
                for (std::size_t v = 0; v < c.variants.size(); ++v)
                    rates[c.variants[v].name] =
                        el ? ordered_json(double(pass_counts[group][v]) / double(el)) : ordered_json(nullptr);
                g["eligible_users"] = el;
                g["pass_rates"] = rates;
            }
            groups.push_back(g);
        }
    });
    run.write_json("classification.json", groups);
}

std::string advisory(double d) {
    if (std::abs(d - 1.0) <= 0.15)
        return "D is close to 1: the aggregate curve is a fair summary of the typical user.";
    return "D is far from 1: the aggregate peak misrepresents individual users; report individual-level "
           "(or hierarchical) peak estimates instead of the aggregate.";
}

void cmd_diagnose(Run& run, const std::string& input, const std::string& peaks_file, std::ostream& out) {
    const auto& c = run.config();
    const auto series = load_series(input);

    std::map<std::string, double> truth;
    if (!peaks_file.empty()) {
        const CsvTable t = read_table(peaks_file);
        const std::size_t cu = t.column("user_id");
        const std::size_t cp = t.has("true_peak") ? t.column("true_peak") : t.column("peak");
        for (const auto& r : t.rows) truth[r[cu]] = to_number(r[cp], t.header[cp]);
    }
    std::vector<std::optional<StrictGateReport>> reports;
    if (truth.empty()) reports = run.stage("user_gates", [&] { return classify_users(series, c); });

    std::map<std::pair<std::string, std::string>, double> fitted;
    for (std::size_t i = 0; i < reports.size(); ++i)
        if (reports[i] && reports[i]->passed) fitted[{series[i].group, series[i].user_id}] = *reports[i]->n_star;

    ordered_json groups = ordered_json::array();
    run.stage("distortion", [&] {
        for (const auto& [group, members] : by_group(series)) {
            const BinnedCurve curve =
                aggregate_curve(members, c.aggregate.max_exposure, c.aggregate.min_bin_count);
            const FitResult agg = fit(to_points(curve, c.aggregate.weight_by_count), ModelKind::HillExponential,
                                      aggregate_fit_config(c, curve));
            run.write("aggregate_curve_" + slug(group) + ".csv", curve_csv(curve, agg.params));

            std::vector<double> peaks;
            for (const auto& s : members) {
                if (!truth.empty()) {
                    const auto it = truth.find(s.user_id);
                    if (it != truth.end()) peaks.push_back(it->second);
                } else {
                    const auto it = fitted.find({s.group, s.user_id});
                    if (it != fitted.end()) peaks.push_back(it->second);
                }
            }
            std::map<long long, std::size_t> hist;
            for (double p : peaks) ++hist[std::llround(p)];
            std::ostringstream h;
            h << "peak,count\n";
            for (const auto& [p, n] : hist) h << p << ',' << n << '\n';
            run.write("peak_histogram_" + slug(group) + ".csv", h.str());

            ordered_json g;
            const std::string source = truth.empty() ? "fitted_strict" : "supplied";
            if (!agg.peak.n_star) {
                g = {{"group", group}, {"D", nullptr}, {"reason", "aggregate fit has no peak"}};
            } else if (peaks.size() < 5) {
                g = {{"group", group},
                     {"aggregate_peak", *agg.peak.n_star},
                     {"D", nullptr},
                     {"reason", truth.empty() ? "fewer than 5 strict-classified users"
                                              : "fewer than 5 users with supplied peaks"}};
            } else {
                DistortionOptions opt;
                opt.bootstrap = c.distortion_bootstrap;
                opt.subsample_size = c.stability_subsample;
                opt.stability_window = c.stability_window;
                opt.seed = c.seed;
                const DistortionReport r = distortion_factor(*agg.peak.n_star, peaks, opt, group);
                g = to_json(r);
                g["aggregate_peak_interior"] = agg.peak.interior;
                g["advisory"] = advisory(r.distortion);
                out << group << ": D = " << format_double(r.distortion) << ". " << advisory(r.distortion) << "\n";
            }
            g["peak_source"] = source;
            groups.push_back(g);
        }
    });
    run.write_json("distortion.json", groups);
}

void cmd_calibrate(Run& run) {
    const auto& c = run.config();
    SncConfig snc;
    snc.generator = {c.calibration_lengths, c.generator_smoothing_window};
    snc.pipeline = c.user_pipeline();
    snc.n_per_condition = c.calibration_n;
    snc.seed = c.seed;
    snc.observed_rate = c.observed_rate;
    snc.variants = c.variants;
    const auto report = run.stage("calibrate", [&] { return snc_calibrate(snc, c.jobs); });
    run.write_json("calibration.json", to_json(report));
}

void cmd_synth(Run& run, const std::string& export_cell) {
    const auto& c = run.config();
    if (!export_cell.empty()) {
        FactorialConfig f = c.factorial;
        if (export_cell == "both") f.survival_bias = f.amplitude_correlation = true;
        else if (export_cell == "survival") f.survival_bias = true, f.amplitude_correlation = false;
        else if (export_cell == "amplitude") f.survival_bias = false, f.amplitude_correlation = true;
        else if (export_cell == "baseline") f.survival_bias = f.amplitude_correlation = false;
        else throw ConfigError("--export-cell must be one of both, survival, amplitude, baseline");
        const Population pop = run.stage("generate", [&] { return generate_population(f, c.jobs); });
        std::ostringstream events, peaks;
        write_population_events(events, pop);
        write_true_peaks(peaks, pop);
        run.write("events.csv", events.str());
        run.write("true_peaks.csv", peaks.str());
    }
    const auto cells = run.stage("factorial", [&] { return run_factorial(c.factorial, c.factorial_pipeline, c.jobs); });
    ordered_json arr = ordered_json::array();
    std::ostringstream csv;
    csv << "survival_bias,amplitude_correlation,individual_median,aggregate_peak,D,failed\n";
    for (const auto& cell : cells) {
        arr.push_back(to_json(cell));
        csv << cell.survival_bias << ',' << cell.amplitude_correlation << ','
            << format_double(cell.individual_median) << ',' << format_double(cell.aggregate_peak) << ','
            << format_double(cell.distortion) << ',' << cell.failed << '\n';
    }
    run.write_json("factorial.json",
                   {{"peak_mode", c.factorial_pipeline.mode == PeakMode::GroundTruth ? "ground_truth" : "fitted"},
                    {"cells", arr}});
    run.write("factorial.csv", csv.str());
}

void cmd_power(Run& run) {
    const auto& c = run.config();
    const auto cells = run.stage("power", [&] {
        return power_analysis(c.power, c.aggregate_pipeline(), c.seed, c.jobs);
    });
    ordered_json arr = ordered_json::array();
    std::ostringstream csv;
    csv << "tier,amplitude,bin_size,detections,reps,power\n";
    for (const auto& cell : cells) {
        arr.push_back(to_json(cell));
        csv << cell.tier << ',' << format_double(cell.amplitude) << ',' << cell.bin_size << ','
            << cell.detections << ',' << cell.reps << ',' << format_double(cell.power) << '\n';
    }
    run.write_json("power.json", arr);
    run.write("power.csv", csv.str());
}

void cmd_shrink(Run& run, const std::string& input) {
    const auto& c = run.config();
    const auto series = load_series(input);
    const auto reports = run.stage("user_gates", [&] { return classify_users(series, c); });

    std::vector<std::size_t> chosen;
    for (std::size_t i = 0; i < series.size(); ++i)
        if (reports[i] && reports[i]->passed) chosen.push_back(i);
    std::vector<std::optional<PeakObservation>> obs(chosen.size());
    run.stage("bootstrap", [&] {
        UncertaintyOptions opt{c.smoothing_window, c.eb_bootstrap, c.seed};
        FitConfig fc = c.fit;
        fc.n_starts = std::max(1, c.permutation_refit_starts);
        parallel_for(chosen.size(), c.jobs, [&](std::size_t k) {
            try {
                obs[k] = estimate_obs_uncertainty(series[chosen[k]], fc, opt);
            } catch (const DataError&) {
            }
        });
    });

    std::map<std::string, std::vector<PeakObservation>> groups;
    for (const auto& o : obs)
        if (o) groups[o->group].push_back(*o);
    std::ostringstream csv;
    csv << "user_id,group,raw_peak,sigma_obs,w,posterior_peak\n";
    ordered_json summary = ordered_json::array();
    for (const auto& [group, list] : groups) {
        if (list.size() < 2) {
            summary.push_back({{"group", group}, {"error", "fewer than two users with peaks"}});
            continue;
        }
        const HierarchicalSummary h = hierarchical_peak(list);
        for (const auto& u : h.users)
            csv << csv_field(u.user_id) << ',' << csv_field(u.group) << ',' << format_double(u.raw_peak) << ','
                << format_double(u.sigma_obs) << ',' << format_double(u.weight) << ','
                << format_double(u.posterior_peak) << '\n';
        ordered_json g = {{"group", group}};
        g.update(to_json(h));
        summary.push_back(g);
    }
    run.write("shrinkage.csv", csv.str());
    run.write_json("shrinkage_summary.json", summary);
}

void cmd_pool(Run& run, const std::string& input) {
    const CsvTable t = read_table(input);
    std::vector<SelectionSummary> summaries;
    if (t.has("rho")) {
        const auto cd = t.column("dataset"), cr = t.column("rho"), cs = t.column("sigma"),
                   cb = t.column("s_bar"), cn = t.column("n");
        for (const auto& r : t.rows) {
            SelectionSummary s;
            s.dataset = r[cd];
            s.rho = to_number(r[cr], "rho");
            s.sigma = to_number(r[cs], "sigma");
            s.s_bar = to_number(r[cb], "s_bar");
            s.n = static_cast<std::size_t>(to_number(r[cn], "n"));
            summaries.push_back(s);
        }
    } else {
        const auto cd = t.column("dataset"), cp = t.column("peak"), cm = t.column("n_max");
        std::map<std::string, std::pair<std::vector<double>, std::vector<int>>> data;
        for (const auto& r : t.rows) {
            data[r[cd]].first.push_back(to_number(r[cp], "peak"));
            data[r[cd]].second.push_back(static_cast<int>(to_number(r[cm], "n_max")));
        }
        for (const auto& [name, d] : data) summaries.push_back(selection_summary(d.first, d.second, std::nullopt, name));
    }
    const PooledResult r = run.stage("pool", [&] { return pooled_distortion(summaries); });
    ordered_json ds = ordered_json::array();
    for (const auto& s : summaries) ds.push_back(to_json(s));
    ordered_json j = to_json(r);
    j["datasets"] = ds;
    run.write_json("pooled.json", j);
}

void cmd_permtest(Run& run, const std::string& input) {
    const auto& c = run.config();
    const CsvTable t = read_table(input);
    const auto cu = t.column("user_id"), cg = t.column("group"), cp = t.column("peak");
    std::vector<UserGroupPeak> peaks;
    for (const auto& r : t.rows) peaks.push_back({r[cu], r[cg], to_number(r[cp], "peak")});
    const auto res = run.stage("permutation", [&] {
        return within_user_permutation(peaks, c.within_user_B, c.seed, c.jobs);
    });
    run.write_json("within_user.json", to_json(res));
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"peakshift: aggregation-distortion diagnostics for engagement curves", "peakshift"};
    app.require_subcommand(1);
    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> jobs;
    app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "Random seed (overrides config)");
    app.add_option("--jobs", jobs, "Worker threads (overrides config)")->check(CLI::PositiveNumber);
    app.add_option("--out", out_dir, "Output directory (overrides config)");

    std::string input, peaks, export_cell;
    auto* ingest = app.add_subcommand("ingest", "Parse an event CSV into exposure series");
    ingest->add_option("--input", input, "Event CSV")->required();
    auto* fitc = app.add_subcommand("fit", "Fit all seven families to each group's aggregate curve");
    fitc->add_option("--input", input, "Series CSV")->required();
    auto* classify = app.add_subcommand("classify", "Strict per-user gates and aggregate classes");
    classify->add_option("--input", input, "Series CSV")->required();
    auto* diagnose = app.add_subcommand("diagnose", "Distortion factor per group");
    diagnose->add_option("--input", input, "Series CSV")->required();
    diagnose->add_option("--peaks", peaks, "CSV of user_id,true_peak to use instead of fitted peaks");
    app.add_subcommand("calibrate", "Synthetic null calibration of the per-user classifier");
    auto* synth = app.add_subcommand("synth", "Survival/amplitude factorial on synthetic populations");
    synth->add_option("--export-cell", export_cell, "Also export one cell's population: both, survival, amplitude, baseline");
    app.add_subcommand("power", "Detection power grid");
    auto* shrinkc = app.add_subcommand("shrink", "Empirical-Bayes shrinkage of per-user peaks");
    shrinkc->add_option("--input", input, "Series CSV")->required();
    auto* pool = app.add_subcommand("pool", "Pooled cross-dataset selection estimator");
    pool->add_option("--input", input, "CSV of dataset,rho,sigma,s_bar,n or dataset,peak,n_max")->required();
    auto* permtest = app.add_subcommand("permtest", "Within-user permutation test across groups");
    permtest->add_option("--input", input, "CSV of user_id,group,peak")->required();
    app.fallthrough();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        RunConfig config = config_path.empty() ? parse_config(nlohmann::json::object()) : load_config(config_path);
        if (seed) {
            config.seed = *seed;
            config.fit.seed = config.factorial.seed = *seed;
            config.factorial_pipeline.fit.seed = *seed;
        }
        if (jobs) config.jobs = *jobs;
        if (!out_dir.empty()) config.output_dir = out_dir;

        Run run(command, config);
        if (command == "ingest") cmd_ingest(run, input);
        else if (command == "fit") cmd_fit(run, input);
        else if (command == "classify") cmd_classify(run, input);
        else if (command == "diagnose") cmd_diagnose(run, input, peaks, out);
        else if (command == "calibrate") cmd_calibrate(run);
        else if (command == "synth") cmd_synth(run, export_cell);
        else if (command == "power") cmd_power(run);
        else if (command == "shrink") cmd_shrink(run, input);
        else if (command == "pool") cmd_pool(run, input);
        else if (command == "permtest") cmd_permtest(run, input);
        run.write_manifest();
        return 0;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const SchemaError& e) {
        err << "schema error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        const std::string what = e.what();
        err << "error: " << (what == "insufficient population coverage" ? "insufficient population: " : "") << what
            << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace peakshift
