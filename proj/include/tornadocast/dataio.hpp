#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tornadocast/csv.hpp"
#include "tornadocast/date.hpp"

namespace tornadocast {

inline constexpr int kMagnitudeUnknown = -1;

/// One dated, located row of raw meteorological attributes. Known columns
/// map onto the named fields; any further numeric columns are kept in
/// `extras` in their original order.
struct WeatherRecord {
    Date date;
    std::string location_id;
    double temp_max = 0, temp_min = 0, temp_avg = 0;
    double feels_like = 0;
    double dew_point = 0, humidity = 0;
    double precip_amount = 0, precip_prob = 0, precip_cover = 0;
    double wind_speed = 0, wind_dir = 0;
    double sea_level_pressure = 0;
    double cloud_cover = 0, visibility = 0;
    double moon_phase = 0;
    std::vector<std::pair<std::string, double>> extras;
};

/// Canonical weather column names in schema order, with the range each
/// one must lie in (NaN bound = unbounded on that side).
struct WeatherColumnSpec {
    const char* name;
    double lo;
    double hi;
    bool lo_open = false;
    bool hi_open = false;
};
std::span<const WeatherColumnSpec> weather_schema();

struct TornadoEvent {
    Date date;
    std::string location_id;
    int magnitude = kMagnitudeUnknown;  // EF 0..5, or kMagnitudeUnknown
    std::optional<double> latitude;
    std::optional<double> longitude;
};

/// Cleaned numeric weather table: date and location kept as keys, every
/// feature cell a double (NaN while a value is still missing).
struct FeatureTable {
    std::vector<std::string> feature_names;
    std::vector<std::string> date_text;  // source strings until parse_dates
    std::vector<Date> dates;             // filled by parse_dates
    std::vector<std::string> locations;
    std::vector<double> values;          // row-major [n_rows x n_features]

    std::size_t n_rows() const { return locations.size(); }
    std::size_t n_features() const { return feature_names.size(); }
    double at(std::size_t r, std::size_t c) const { return values[r * n_features() + c]; }
    double& at(std::size_t r, std::size_t c) { return values[r * n_features() + c]; }
};

struct ColumnDropReport {
    struct Entry {
        std::string name;
        std::string reason;
    };
    std::vector<Entry> dropped;
};

struct DroppedEventsReport {
    std::size_t count = 0;
    std::vector<TornadoEvent> examples;  // first few, for the JSON report
};

/// Labeled samples in canonical order; the dataset every later stage
/// consumes. Features are row-major, result is {0,1}.
struct Dataset {
    std::vector<std::string> feature_names;
    std::vector<Date> dates;
    std::vector<std::string> locations;
    std::vector<double> features;
    std::vector<int> labels;

    std::size_t n_rows() const { return labels.size(); }
    std::size_t n_features() const { return feature_names.size(); }
    double at(std::size_t r, std::size_t c) const { return features[r * n_features() + c]; }
    std::span<const double> row(std::size_t r) const {
        return {features.data() + r * n_features(), n_features()};
    }
};

struct DatasetSummary {
    std::map<int, std::int64_t> rows_per_year;
    std::map<int, std::int64_t> tornado_per_year;
    std::int64_t total_rows = 0;
    std::int64_t total_positives = 0;
    std::size_t n_features = 0;
};

// ---- pipeline operations ----

/// Loads a raw weather CSV. When `schema` is non-empty the header must
/// match it exactly. Throws FileError on missing files or ragged rows.
CsvTable load_weather_csv(const std::string& path,
                          const std::vector<std::string>& schema = {});

/// Drops non-numeric columns (except the date and location keys) and
/// columns whose missing fraction exceeds `sparsity_threshold`.
/// Empty cells and NA/N-A/NaN/null markers count as missing.
/// Throws SchemaError when no feature column survives or a key column is
/// absent.
std::pair<FeatureTable, ColumnDropReport> clean_columns(
    const CsvTable& raw, double sparsity_threshold = 0.5);

/// Replaces every missing cell with its column mean over present values.
/// A column with no present value at all throws (clean_columns should
/// have dropped it).
void impute_mean(FeatureTable& table);

/// Parses the date strings and sorts rows ascending by (date, location).
/// Throws FileError naming the 1-based row and offending text.
void parse_dates(FeatureTable& table);

/// Reads a storm-event CSV; requires date, location_id and magnitude
/// columns, takes latitude/longitude when present.
std::vector<TornadoEvent> load_events_csv(const std::string& path);

/// Labels each weather row 1 iff at least one event shares its
/// (date, location). Events matching no weather row go into the report.
std::pair<Dataset, DroppedEventsReport> join_label(
    const FeatureTable& weather, const std::vector<TornadoEvent>& events);

DatasetSummary summarize(const Dataset& samples);

/// Checks the known weather columns against their documented ranges;
/// returns one message per violating cell (capped).
std::vector<std::string> range_violations(const FeatureTable& table,
                                          std::size_t max_messages = 20);

/// View of one cleaned, date-parsed row as a WeatherRecord.
WeatherRecord weather_record_at(const FeatureTable& table, std::size_t row);

/// Round-trips a cleaned table back to raw CSV form (used to re-run the
/// cleaning pipeline on its own output, and to persist unlabeled data).
CsvTable to_raw(const FeatureTable& table);

// ---- canonical dataset persistence ----

/// Header is `date,location_id,<features...>,result`; reals are written
/// as shortest round-trip decimal text.
void save_dataset(const std::string& path, const Dataset& dataset);

/// `require_label=false` accepts files without the result column
/// (labels default to 0), for scoring fresh data.
Dataset load_dataset(const std::string& path, bool require_label = true);

// ---- JSON reports ----

std::string drop_reports_to_json(const ColumnDropReport& columns,
                                 const DroppedEventsReport& events,
                                 const DatasetSummary& summary);

}  // namespace tornadocast
