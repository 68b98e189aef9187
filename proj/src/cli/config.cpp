#include "peakshift/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "peakshift/error.hpp"

namespace peakshift {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Typed reader over one JSON object that remembers which keys it consumed.
class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ConfigError("config section '" + label() + "' must be an object");
    }

    template <class T>
    void get(const std::string& key, T& out) {
        seen_.insert(key);
        if (!node_.contains(key)) return;
        try {
            out = node_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError("config key '" + path_ + key + "' has the wrong type");
        }
    }

    template <class T>
    void get_optional(const std::string& key, std::optional<T>& out) {
        seen_.insert(key);
        if (!node_.contains(key)) return;
        if (node_.at(key).is_null()) {
            out.reset();
            return;
        }
        T value{};
        get(key, value);
        out = value;
    }

    void bounds(const std::string& key, ParamBounds& out) {
        std::vector<double> pair;
        get(key, pair);
        if (!node_.contains(key)) return;
        if (pair.size() != 2) throw ConfigError("config key '" + path_ + key + "' must be [lo, hi]");
        out = {pair[0], pair[1]};
    }

    Section sub(const std::string& key) {
        seen_.insert(key);
        static const json empty = json::object();
        return Section(node_.contains(key) ? node_.at(key) : empty, path_ + key + ".");
    }

    bool has(const std::string& key) const { return node_.contains(key); }
    const json& raw(const std::string& key) {
        seen_.insert(key);
        return node_.at(key);
    }

    void finish() const {
        for (const auto& item : node_.items())
            if (!seen_.count(item.key()))
                throw ConfigError("unknown config key '" + path_ + item.key() + "'");
    }

private:
    std::string label() const { return path_.empty() ? "<root>" : path_.substr(0, path_.size() - 1); }

    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

StrictVariant variant_from_name(const std::string& name) {
    if (name == "strict") return strict_variant();
    if (name == "no_decline") return no_decline_variant();
    if (name == "original") return original_variant();
    if (name.rfind("strict_", 0) == 0) {
        try {
            std::size_t used = 0;
            const int pct = std::stoi(name.substr(7), &used);
            if (used == name.size() - 7 && pct > 0 && pct < 100) return strict_variant(pct / 100.0);
        } catch (const std::exception&) {
        }
    }
    throw ConfigError("unknown classifier variant '" + name + "'");
}

std::string decay_mode_name(DecayLaw::Mode m) {
    return m == DecayLaw::Mode::Absolute ? "absolute" : "proportional";
}

void read_aggregate(Section s, AggregateFitOptions& a) {
    s.get("max_exposure", a.max_exposure);
    s.get("min_bin_count", a.min_bin_count);
    s.get("weight_by_count", a.weight_by_count);
    s.finish();
    if (a.max_exposure < 1) throw ConfigError("max_exposure must be >= 1");
}

ordered_json aggregate_json(const AggregateFitOptions& a) {
    return {{"max_exposure", a.max_exposure},
            {"min_bin_count", a.min_bin_count},
            {"weight_by_count", a.weight_by_count}};
}

}  // namespace

UserPipeline RunConfig::user_pipeline() const {
    return {smoothing_window, min_raw_length, min_smoothed_length, fit};
}

AggregatePipeline RunConfig::aggregate_pipeline() const {
    AggregatePipeline p;
    p.fit = fit;
    p.permutation = {permutation_B, seed, permutation_refit_starts};
    p.weight_by_count = aggregate.weight_by_count;
    return p;
}

RunConfig parse_config(const json& document) {
    RunConfig c;
    Section root(document, "");
    root.get("seed", c.seed);
    root.get("jobs", c.jobs);
    root.get("output_dir", c.output_dir);

    {
        Section s = root.sub("ingest");
        Section cols = s.sub("columns");
        cols.get("user_id", c.schema.user_id);
        cols.get("item_id", c.schema.item_id);
        cols.get("group", c.schema.group);
        cols.get("rating", c.schema.rating);
        cols.get("timestamp", c.schema.timestamp);
        cols.finish();
        s.get("engagement_threshold", c.engagement_threshold);
        s.get_optional("group", c.group);
        s.finish();
    }
    {
        Section s = root.sub("preprocess");
        s.get("smoothing_window", c.smoothing_window);
        s.get("min_raw_length", c.min_raw_length);
        s.get("min_smoothed_length", c.min_smoothed_length);
        s.finish();
    }
    {
        Section s = root.sub("fit");
        s.get("n_starts", c.fit.n_starts);
        s.get("max_iterations", c.fit.max_iterations);
        s.get("tolerance", c.fit.tolerance);
        s.get("grid_step", c.fit.grid_step);
        Section b = s.sub("bounds");
        b.bounds("baseline", c.fit.bounds.baseline);
        b.bounds("amplitude", c.fit.bounds.amplitude);
        b.bounds("onset", c.fit.bounds.onset);
        b.bounds("half_max", c.fit.bounds.half_max);
        b.bounds("decay", c.fit.bounds.decay);
        b.bounds("center", c.fit.bounds.center);
        b.bounds("width", c.fit.bounds.width);
        b.finish();
        s.finish();
    }
    read_aggregate(root.sub("aggregate"), c.aggregate);
    {
        Section s = root.sub("classifier");
        if (s.has("variants")) {
            std::vector<std::string> names;
            s.get("variants", names);
            if (names.empty()) throw ConfigError("classifier.variants must not be empty");
            c.variants.clear();
            for (const auto& n : names) c.variants.push_back(variant_from_name(n));
        }
        s.finish();
    }
    {
        Section s = root.sub("resampling");
        s.get("eb_bootstrap", c.eb_bootstrap);
        s.get("distortion_bootstrap", c.distortion_bootstrap);
        s.get("permutation_B", c.permutation_B);
        s.get("permutation_refit_starts", c.permutation_refit_starts);
        s.get("within_user_B", c.within_user_B);
        s.finish();
    }
    {
        Section s = root.sub("diagnose");
        s.get("stability_subsample", c.stability_subsample);
        if (s.has("stability_window") && !s.raw("stability_window").is_null()) {
            std::vector<double> w;
            s.get("stability_window", w);
            if (w.size() != 2 || !(w[0] <= w[1])) throw ConfigError("diagnose.stability_window must be [lo, hi]");
            c.stability_window = std::pair{w[0], w[1]};
        }
        s.finish();
    }
    {
        Section s = root.sub("calibration");
        s.get("n_per_condition", c.calibration_n);
        s.get_optional("observed_rate", c.observed_rate);
        s.get("generator_smoothing_window", c.generator_smoothing_window);
        Section l = s.sub("lengths");
        l.get("empirical", c.calibration_lengths.empirical);
        l.get("uniform_lo", c.calibration_lengths.uniform_lo);
        l.get("uniform_hi", c.calibration_lengths.uniform_hi);
        l.finish();
        s.finish();
    }
    {
        Section s = root.sub("factorial");
        auto& f = c.factorial;
        s.get("n_users", f.n_users);
        s.get("peak_median", f.peak_median);
        s.get("peak_log_sd", f.peak_log_sd);
        s.get("baseline", f.baseline);
        s.get("onset", f.onset);
        s.get("unbiased_length", f.unbiased_length);
        Section d = s.sub("decay");
        std::string mode = decay_mode_name(f.decay.mode);
        d.get("mode", mode);
        if (mode == "absolute") f.decay.mode = DecayLaw::Mode::Absolute;
        else if (mode == "proportional") f.decay.mode = DecayLaw::Mode::Proportional;
        else throw ConfigError("factorial.decay.mode must be 'absolute' or 'proportional'");
        d.get("lo", f.decay.lo);
        d.get("hi", f.decay.hi);
        d.finish();
        Section sv = s.sub("survival");
        sv.get("gamma", f.survival.gamma);
        sv.get("elasticity", f.survival.elasticity);
        sv.get("eta_sd", f.survival.eta_sd);
        sv.get("floor", f.survival.floor);
        sv.finish();
        Section a = s.sub("amplitude");
        a.get("intercept", f.amplitude.intercept);
        a.get("slope", f.amplitude.slope);
        a.get("noise_sd", f.amplitude.noise_sd);
        a.get("lo", f.amplitude.lo);
        a.get("hi", f.amplitude.hi);
        a.get("constant", f.amplitude.constant);
        a.finish();
        read_aggregate(s.sub("aggregate"), c.factorial_pipeline.aggregate);
        std::string pm = "ground_truth";
        s.get("peak_mode", pm);
        if (pm == "ground_truth") c.factorial_pipeline.mode = PeakMode::GroundTruth;
        else if (pm == "fitted") c.factorial_pipeline.mode = PeakMode::Fitted;
        else throw ConfigError("factorial.peak_mode must be 'ground_truth' or 'fitted'");
        s.get("fitted_starts", c.factorial_pipeline.fitted_starts);
        s.finish();
    }
    {
        Section s = root.sub("power");
        auto& p = c.power;
        if (s.has("tiers")) {
            const json& tiers = s.raw("tiers");
            if (!tiers.is_array() || tiers.empty()) throw ConfigError("power.tiers must be a non-empty array");
            p.tiers.clear();
            for (const auto& t : tiers) {
                PowerTier tier;
                Section ts(t, "power.tiers[].");
                ts.get("name", tier.name);
                ts.get("amplitude", tier.amplitude);
                ts.finish();
                p.tiers.push_back(tier);
            }
        }
        s.get("bin_sizes", p.bin_sizes);
        s.get("reps", p.reps);
        Section sh = s.sub("shape");
        sh.get("baseline", p.baseline);
        sh.get("onset", p.onset);
        sh.get("half_max", p.half_max);
        sh.get("decay", p.decay);
        sh.get("max_exposure", p.max_exposure);
        sh.finish();
        s.finish();
    }
    root.finish();

    // Cross-field validation.
    c.fit.seed = c.seed;
    c.factorial.seed = c.seed;
    c.factorial_pipeline.fit = c.fit;
    c.fit.validate();
    c.factorial.validate();
    if (c.smoothing_window < 1 || c.smoothing_window % 2 == 0)
        throw ConfigError("preprocess.smoothing_window must be odd and >= 1");
    if (!(c.engagement_threshold > 0.0 && c.engagement_threshold <= 5.0))
        throw ConfigError("ingest.engagement_threshold must be in (0, 5]");
    if (c.jobs < 1) throw ConfigError("jobs must be >= 1");
    if (c.power.reps < 10) throw ConfigError("power.reps must be >= 10");
    if (c.permutation_B < 100) throw ConfigError("resampling.permutation_B must be >= 100");
    if (c.observed_rate && !(*c.observed_rate >= 0.0 && *c.observed_rate <= 1.0))
        throw ConfigError("calibration.observed_rate must be in [0, 1]");
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

ordered_json config_to_json(const RunConfig& c) {
    auto b = [](ParamBounds p) { return ordered_json::array({p.lo, p.hi}); };
    ordered_json variants = ordered_json::array();
    for (const auto& v : c.variants) variants.push_back(v.name);
    ordered_json tiers = ordered_json::array();
    for (const auto& t : c.power.tiers) tiers.push_back({{"name", t.name}, {"amplitude", t.amplitude}});
    const auto& f = c.factorial;

    ordered_json j;
    j["seed"] = c.seed;
    j["jobs"] = c.jobs;
    j["output_dir"] = c.output_dir;
    j["ingest"] = {{"columns",
                    {{"user_id", c.schema.user_id},
                     {"item_id", c.schema.item_id},
                     {"group", c.schema.group},
                     {"rating", c.schema.rating},
                     {"timestamp", c.schema.timestamp}}},
                   {"engagement_threshold", c.engagement_threshold},
                   {"group", c.group ? ordered_json(*c.group) : ordered_json(nullptr)}};
    j["preprocess"] = {{"smoothing_window", c.smoothing_window},
                       {"min_raw_length", c.min_raw_length},
                       {"min_smoothed_length", c.min_smoothed_length}};
    j["fit"] = {{"n_starts", c.fit.n_starts},
                {"max_iterations", c.fit.max_iterations},
                {"tolerance", c.fit.tolerance},
                {"grid_step", c.fit.grid_step},
                {"bounds",
                 {{"baseline", b(c.fit.bounds.baseline)},
                  {"amplitude", b(c.fit.bounds.amplitude)},
                  {"onset", b(c.fit.bounds.onset)},
                  {"half_max", b(c.fit.bounds.half_max)},
                  {"decay", b(c.fit.bounds.decay)},
                  {"center", b(c.fit.bounds.center)},
                  {"width", b(c.fit.bounds.width)}}}};
    j["aggregate"] = aggregate_json(c.aggregate);
    j["classifier"] = {{"variants", variants}};
    j["resampling"] = {{"eb_bootstrap", c.eb_bootstrap},
                       {"distortion_bootstrap", c.distortion_bootstrap},
                       {"permutation_B", c.permutation_B},
                       {"permutation_refit_starts", c.permutation_refit_starts},
                       {"within_user_B", c.within_user_B}};
    j["diagnose"] = {{"stability_subsample", c.stability_subsample},
                     {"stability_window", c.stability_window
                                              ? ordered_json::array({c.stability_window->first,
                                                                     c.stability_window->second})
                                              : ordered_json(nullptr)}};
    j["calibration"] = {{"n_per_condition", c.calibration_n},
                        {"observed_rate", c.observed_rate ? ordered_json(*c.observed_rate) : ordered_json(nullptr)},
                        {"generator_smoothing_window", c.generator_smoothing_window},
                        {"lengths",
                         {{"empirical", c.calibration_lengths.empirical},
                          {"uniform_lo", c.calibration_lengths.uniform_lo},
                          {"uniform_hi", c.calibration_lengths.uniform_hi}}}};
    j["factorial"] = {{"n_users", f.n_users},
                      {"peak_median", f.peak_median},
                      {"peak_log_sd", f.peak_log_sd},
                      {"baseline", f.baseline},
                      {"onset", f.onset},
                      {"unbiased_length", f.unbiased_length},
                      {"decay", {{"mode", decay_mode_name(f.decay.mode)}, {"lo", f.decay.lo}, {"hi", f.decay.hi}}},
                      {"survival",
                       {{"gamma", f.survival.gamma},
                        {"elasticity", f.survival.elasticity},
                        {"eta_sd", f.survival.eta_sd},
                        {"floor", f.survival.floor}}},
                      {"amplitude",
                       {{"intercept", f.amplitude.intercept},
                        {"slope", f.amplitude.slope},
                        {"noise_sd", f.amplitude.noise_sd},
                        {"lo", f.amplitude.lo},
                        {"hi", f.amplitude.hi},
                        {"constant", f.amplitude.constant}}},
                      {"aggregate", aggregate_json(c.factorial_pipeline.aggregate)},
                      {"peak_mode", c.factorial_pipeline.mode == PeakMode::GroundTruth ? "ground_truth" : "fitted"},
                      {"fitted_starts", c.factorial_pipeline.fitted_starts}};
    j["power"] = {{"tiers", tiers},
                  {"bin_sizes", c.power.bin_sizes},
                  {"reps", c.power.reps},
                  {"shape",
                   {{"baseline", c.power.baseline},
                    {"onset", c.power.onset},
                    {"half_max", c.power.half_max},
                    {"decay", c.power.decay},
                    {"max_exposure", c.power.max_exposure}}}};
    return j;
}

}  // namespace peakshift
