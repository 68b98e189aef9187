#pragma once

// Event ingestion and exposure-series construction.
//
// An exposure series is one user's ordered engagement record inside one group:
// e(n) in {0, 1} for n = 1..L, where n counts the user's interactions with the
// group so far. The aggregate curve averages e(n) over every user still
// contributing at n, which is exactly the survival-weighted mean
//   sum_u S_u(n) e_u(n) / sum_u S_u(n),  S_u(n) = 1[n <= L_u].

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace peakshift {

struct InteractionEvent {
    std::string user_id;
    std::string item_id;
    std::string group;
    double rating = 0.0;
    std::optional<std::int64_t> timestamp;
    std::size_t input_order = 0;  // row index among accepted rows
};

struct ColumnSchema {
    std::string user_id = "user_id";
    std::string item_id = "item_id";
    std::string group = "group";
    std::string rating = "rating";
    std::string timestamp = "timestamp";
};

struct IngestReport {
    std::size_t rows_read = 0;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t distinct_users = 0;
    std::size_t distinct_groups = 0;
    // First few rejection diagnostics, "line N: reason".
    std::vector<std::string> reject_samples;
};

struct IngestResult {
    std::vector<InteractionEvent> events;
    IngestReport report;
};

// Parses the event CSV. Throws SchemaError when the header is missing or a
// mapped column is absent; malformed rows are skipped and counted.
IngestResult ingest_events(std::istream& source, const ColumnSchema& schema = {});

struct ExposureSeries {
    std::string user_id;
    std::string group;
    std::vector<std::uint8_t> engagement;  // e(1..L)
    std::vector<double> raw_ratings;       // parallel to engagement

    std::size_t length() const noexcept { return engagement.size(); }
};

inline constexpr double kDefaultEngagementThreshold = 4.0;

// One series per (user, group), sorted by (group, user_id). Events within a
// series are ordered by timestamp, ties and missing timestamps by input order;
// events without a timestamp sort after timestamped ones.
std::vector<ExposureSeries> build_exposure_series(
    std::span<const InteractionEvent> events,
    const std::optional<std::string>& group = std::nullopt,
    double threshold = kDefaultEngagementThreshold);

struct SmoothedSeries {
    std::string user_id;
    std::string group;
    std::vector<double> values;
};

// Centered moving average with truncated windows at the edges; output length
// equals input length. Window must be odd and >= 1.
std::vector<double> moving_average(std::span<const double> values, int window);
SmoothedSeries smooth_series(const ExposureSeries& series, int window = 5);

struct CurveBin {
    int exposure = 0;
    double mean = 0.0;
    std::size_t count = 0;
};

struct BinnedCurve {
    std::string group;
    std::vector<CurveBin> bins;
};

// Survival-weighted mean engagement per exposure count n = 1..max_exposure.
// Bins with fewer than min_bin_count contributors are dropped; throws
// DataError("insufficient population coverage") when none survive.
BinnedCurve aggregate_curve(std::span<const ExposureSeries> series, int max_exposure,
                            std::size_t min_bin_count = 1);

// CSV `user_id,group,n,e,raw_rating`.
void write_series_csv(std::ostream& out, std::span<const ExposureSeries> series);
std::vector<ExposureSeries> read_series_csv(std::istream& in);

// CSV `user_id,item_id,group,rating,timestamp`.
void write_events_csv(std::ostream& out, std::span<const InteractionEvent> events);

// Quotes a field when it contains a comma, quote or line break.
std::string csv_field(const std::string& value);

// Splits one CSV line, honoring double-quoted fields.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace peakshift
