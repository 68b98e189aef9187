#include "peakshift/engagement.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "peakshift/error.hpp"

namespace peakshift {

namespace {

constexpr std::size_t kMaxRejectSamples = 20;

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

bool parse_int64(const std::string& s, std::int64_t& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError("missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

bool read_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

}  // namespace

std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

IngestResult ingest_events(std::istream& source, const ColumnSchema& schema) {
    std::string line;
    if (!read_line(source, line) || trim(line).empty()) throw SchemaError("missing header row");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
        static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF)
        line.erase(0, 3);

    std::vector<std::string> header = split_csv_line(line);
    for (auto& h : header) h = trim(h);
    const std::size_t c_user = column_index(header, schema.user_id);
    const std::size_t c_item = column_index(header, schema.item_id);
    const std::size_t c_group = column_index(header, schema.group);
    const std::size_t c_rating = column_index(header, schema.rating);
    const std::size_t c_ts = column_index(header, schema.timestamp);
    const std::size_t needed = std::max({c_user, c_item, c_group, c_rating, c_ts}) + 1;

    IngestResult result;
    auto& report = result.report;
    std::set<std::string> users, groups;
    std::size_t line_no = 1;

    auto reject = [&](const std::string& reason) {
        ++report.rejected;
        if (report.reject_samples.size() < kMaxRejectSamples)
            report.reject_samples.push_back("line " + std::to_string(line_no) + ": " + reason);
    };

    while (read_line(source, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        ++report.rows_read;
        const auto fields = split_csv_line(line);
        if (fields.size() < needed) {
            reject("expected at least " + std::to_string(needed) + " fields");
            continue;
        }
        InteractionEvent ev;
        ev.user_id = trim(fields[c_user]);
        ev.item_id = trim(fields[c_item]);
        ev.group = trim(fields[c_group]);
        if (ev.user_id.empty() || ev.group.empty()) {
            reject("empty user_id or group");
            continue;
        }
        if (!parse_double(trim(fields[c_rating]), ev.rating)) {
            reject("unparseable rating");
            continue;
        }
        if (ev.rating < 0.0 || ev.rating > 5.0) {
            reject("rating outside [0, 5]");
            continue;
        }
        const std::string ts = trim(fields[c_ts]);
        if (!ts.empty()) {
            std::int64_t t = 0;
            if (!parse_int64(ts, t)) {
                reject("unparseable timestamp");
                continue;
            }
            ev.timestamp = t;
        }
        ev.input_order = result.events.size();
        users.insert(ev.user_id);
        groups.insert(ev.group);
        result.events.push_back(std::move(ev));
        ++report.accepted;
    }
    report.distinct_users = users.size();
    report.distinct_groups = groups.size();
    return result;
}

std::vector<ExposureSeries> build_exposure_series(std::span<const InteractionEvent> events,
                                                  const std::optional<std::string>& group,
                                                  double threshold) {
    if (!(threshold > 0.0 && threshold <= 5.0))
        throw std::invalid_argument("engagement threshold must lie in (0, 5]");

    std::map<std::pair<std::string, std::string>, std::vector<const InteractionEvent*>> buckets;
    for (const auto& ev : events) {
        if (group && ev.group != *group) continue;
        buckets[{ev.group, ev.user_id}].push_back(&ev);
    }

    std::vector<ExposureSeries> out;
    out.reserve(buckets.size());
    for (auto& [key, evs] : buckets) {
        std::stable_sort(evs.begin(), evs.end(), [](const auto* l, const auto* r) {
            const bool lt = l->timestamp.has_value(), rt = r->timestamp.has_value();
            if (lt != rt) return lt;  // timestamped events first
            if (lt && *l->timestamp != *r->timestamp) return *l->timestamp < *r->timestamp;
            return l->input_order < r->input_order;
        });
        ExposureSeries s;
        s.group = key.first;
        s.user_id = key.second;
        s.engagement.reserve(evs.size());
        s.raw_ratings.reserve(evs.size());
        for (const auto* ev : evs) {
            s.engagement.push_back(ev->rating >= threshold ? 1 : 0);
            s.raw_ratings.push_back(ev->rating);
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<double> moving_average(std::span<const double> values, int window) {
    if (window < 1 || window % 2 == 0)
        throw std::invalid_argument("smoothing window must be a positive odd integer");
    const auto n = static_cast<std::ptrdiff_t>(values.size());
    const std::ptrdiff_t half = (window - 1) / 2;
    std::vector<double> out(values.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - half);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + half);
        double sum = 0.0;
        for (std::ptrdiff_t j = lo; j <= hi; ++j) sum += values[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(i)] = sum / static_cast<double>(hi - lo + 1);
    }
    return out;
}

SmoothedSeries smooth_series(const ExposureSeries& series, int window) {
    std::vector<double> raw(series.engagement.begin(), series.engagement.end());
    return {series.user_id, series.group, moving_average(raw, window)};
}

BinnedCurve aggregate_curve(std::span<const ExposureSeries> series, int max_exposure,
                            std::size_t min_bin_count) {
    if (min_bin_count < 1) throw std::invalid_argument("min_bin_count must be >= 1");
    if (max_exposure < 1) throw std::invalid_argument("max_exposure must be >= 1");

    const auto m = static_cast<std::size_t>(max_exposure);
    std::vector<std::size_t> count(m, 0), engaged(m, 0);
    BinnedCurve curve;
    std::set<std::string> groups;
    for (const auto& s : series) {
        groups.insert(s.group);
        const std::size_t len = std::min(s.length(), m);
        for (std::size_t i = 0; i < len; ++i) {
            ++count[i];
            engaged[i] += s.engagement[i];
        }
    }
    if (groups.size() == 1) curve.group = *groups.begin();
    else if (groups.size() > 1) curve.group = "all";

    for (std::size_t i = 0; i < m; ++i) {
        if (count[i] < min_bin_count || count[i] == 0) continue;
        curve.bins.push_back({static_cast<int>(i + 1),
                              static_cast<double>(engaged[i]) / static_cast<double>(count[i]),
                              count[i]});
    }
    if (curve.bins.empty()) throw DataError("insufficient population coverage");
    return curve;
}

void write_series_csv(std::ostream& out, std::span<const ExposureSeries> series) {
    out << "user_id,group,n,e,raw_rating\n";
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.length(); ++i) {
            out << csv_field(s.user_id) << ',' << csv_field(s.group) << ',' << (i + 1) << ','
                << static_cast<int>(s.engagement[i]) << ',';
            if (i < s.raw_ratings.size() && !std::isnan(s.raw_ratings[i])) out << s.raw_ratings[i];
            out << '\n';
        }
    }
}

std::vector<ExposureSeries> read_series_csv(std::istream& in) {
    std::string line;
    if (!read_line(in, line)) throw SchemaError("missing header row");
    std::vector<std::string> header = split_csv_line(line);
    for (auto& h : header) h = trim(h);
    const std::size_t c_user = column_index(header, "user_id");
    const std::size_t c_group = column_index(header, "group");
    const std::size_t c_n = column_index(header, "n");
    const std::size_t c_e = column_index(header, "e");
    const auto c_raw_it = std::find(header.begin(), header.end(), "raw_rating");
    const bool has_raw = c_raw_it != header.end();
    const std::size_t c_raw = static_cast<std::size_t>(c_raw_it - header.begin());

    std::map<std::pair<std::string, std::string>, std::vector<std::tuple<std::int64_t, int, double>>>
        rows;
    std::size_t line_no = 1;
    while (read_line(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto f = split_csv_line(line);
        const std::size_t needed = std::max({c_user, c_group, c_n, c_e}) + 1;
        std::int64_t n = 0, e = 0;
        if (f.size() < needed || !parse_int64(trim(f[c_n]), n) || !parse_int64(trim(f[c_e]), e) ||
            (e != 0 && e != 1) || n < 1)
            throw SchemaError("malformed series row at line " + std::to_string(line_no));
        double raw = std::nan("");
        if (has_raw && c_raw < f.size() && !trim(f[c_raw]).empty()) parse_double(trim(f[c_raw]), raw);
        rows[{trim(f[c_group]), trim(f[c_user])}].emplace_back(n, static_cast<int>(e), raw);
    }

    std::vector<ExposureSeries> out;
    for (auto& [key, vals] : rows) {
        std::sort(vals.begin(), vals.end());
        ExposureSeries s;
        s.group = key.first;
        s.user_id = key.second;
        for (std::size_t i = 0; i < vals.size(); ++i) {
            if (std::get<0>(vals[i]) != static_cast<std::int64_t>(i + 1))
                throw SchemaError("series for user '" + s.user_id + "' in group '" + s.group +
                                  "' has non-contiguous exposure indices");
            s.engagement.push_back(static_cast<std::uint8_t>(std::get<1>(vals[i])));
            s.raw_ratings.push_back(std::get<2>(vals[i]));
        }
        out.push_back(std::move(s));
    }
    return out;
}

void write_events_csv(std::ostream& out, std::span<const InteractionEvent> events) {
    out << "user_id,item_id,group,rating,timestamp\n";
    for (const auto& ev : events) {
        out << csv_field(ev.user_id) << ',' << csv_field(ev.item_id) << ',' << csv_field(ev.group) << ','
            << ev.rating << ',';
        if (ev.timestamp) out << *ev.timestamp;
        out << '\n';
    }
}

}  // namespace peakshift
