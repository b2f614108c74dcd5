#include "tornadocast/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "tornadocast/errors.hpp"

namespace tornadocast {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kUnbounded = std::numeric_limits<double>::quiet_NaN();

const WeatherColumnSpec kWeatherSchema[] = {
    {"temp_max", kUnbounded, kUnbounded},
    {"temp_min", kUnbounded, kUnbounded},
    {"temp_avg", kUnbounded, kUnbounded},
    {"feels_like", kUnbounded, kUnbounded},
    {"dew_point", kUnbounded, kUnbounded},
    {"humidity", 0.0, 100.0},
    {"precip_amount", 0.0, kUnbounded},
    {"precip_prob", 0.0, 100.0},
    {"precip_cover", 0.0, 100.0},
    {"wind_speed", 0.0, kUnbounded},
    {"wind_dir", 0.0, 360.0, false, true},
    {"sea_level_pressure", 0.0, kUnbounded, true, false},
    {"cloud_cover", 0.0, 100.0},
    {"visibility", 0.0, kUnbounded},
    {"moon_phase", 0.0, 1.0},
};

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

bool is_missing(const std::string& cell) {
    const std::string t = lower(trim(cell));
    return t.empty() || t == "na" || t == "n/a" || t == "nan" || t == "null";
}

std::optional<double> parse_number(const std::string& cell) {
    const std::string t = trim(cell);
    if (t.empty()) return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size()) return std::nullopt;
    return v;
}

// Accepted header spellings for the two key columns.
int find_date_column(const CsvTable& raw) {
    for (const char* name : {"date", "datetime"}) {
        for (std::size_t i = 0; i < raw.header.size(); ++i) {
            if (lower(raw.header[i]) == name) return static_cast<int>(i);
        }
    }
    return -1;
}

int find_location_column(const CsvTable& raw) {
    for (const char* name : {"location_id", "location", "station_id", "station", "name"}) {
        for (std::size_t i = 0; i < raw.header.size(); ++i) {
            if (lower(raw.header[i]) == name) return static_cast<int>(i);
        }
    }
    return -1;
}

std::string join_key(std::int64_t serial, const std::string& location) {
    return std::to_string(serial) + '\x1f' + location;
}

}  // namespace

std::span<const WeatherColumnSpec> weather_schema() {
    return {kWeatherSchema, std::size(kWeatherSchema)};
}

CsvTable load_weather_csv(const std::string& path, const std::vector<std::string>& schema) {
    CsvTable table = read_csv(path);
    if (!schema.empty() && table.header != schema) {
        std::string msg = path + ": header does not match expected schema; got [";
        for (std::size_t i = 0; i < table.header.size(); ++i) {
            if (i) msg += ',';
            msg += table.header[i];
        }
        msg += "]";
        throw SchemaError(msg);
    }
    return table;
}

std::pair<FeatureTable, ColumnDropReport> clean_columns(const CsvTable& raw,
                                                        double sparsity_threshold) {
    const int date_col = find_date_column(raw);
    const int loc_col = find_location_column(raw);
    if (date_col < 0) throw SchemaError("no date column found");
    if (loc_col < 0) throw SchemaError("no location column found");

    const std::size_t n_rows = raw.n_rows();
    const std::size_t n_cols = raw.n_cols();

    FeatureTable table;
    ColumnDropReport report;
    std::vector<std::size_t> kept;

    for (std::size_t c = 0; c < n_cols; ++c) {
        if (static_cast<int>(c) == date_col || static_cast<int>(c) == loc_col) continue;
        std::size_t missing = 0;
        bool numeric = true;
        for (std::size_t r = 0; r < n_rows; ++r) {
            const std::string& cell = raw.rows[r][c];
            if (is_missing(cell)) {
                ++missing;
            } else if (numeric && !parse_number(cell)) {
                numeric = false;
            }
        }
        const double missing_fraction =
            n_rows == 0 ? 0.0 : static_cast<double>(missing) / static_cast<double>(n_rows);
        if (missing_fraction > sparsity_threshold) {
            report.dropped.push_back(
                {raw.header[c], "sparse: missing fraction " + format_double(missing_fraction) +
                                    " exceeds threshold " + format_double(sparsity_threshold)});
        } else if (!numeric) {
            report.dropped.push_back({raw.header[c], "non-numeric"});
        } else {
            kept.push_back(c);
        }
    }

    if (kept.empty()) throw SchemaError("no usable features after cleaning");

    for (std::size_t c : kept) table.feature_names.push_back(raw.header[c]);
    table.date_text.resize(n_rows);
    table.locations.resize(n_rows);
    table.values.resize(n_rows * kept.size());
    for (std::size_t r = 0; r < n_rows; ++r) {
        table.date_text[r] = raw.rows[r][static_cast<std::size_t>(date_col)];
        table.locations[r] = raw.rows[r][static_cast<std::size_t>(loc_col)];
        for (std::size_t j = 0; j < kept.size(); ++j) {
            const std::string& cell = raw.rows[r][kept[j]];
            table.values[r * kept.size() + j] = is_missing(cell) ? kNaN : *parse_number(cell);
        }
    }
    return {std::move(table), std::move(report)};
}

void impute_mean(FeatureTable& table) {
    const std::size_t f = table.n_features();
    const std::size_t n = table.n_rows();
    for (std::size_t c = 0; c < f; ++c) {
        double sum = 0.0;
        std::size_t present = 0;
        for (std::size_t r = 0; r < n; ++r) {
            const double v = table.at(r, c);
            if (!std::isnan(v)) {
                sum += v;
                ++present;
            }
        }
        if (present == 0) {
            throw SchemaError("column '" + table.feature_names[c] +
                              "' has no present values; it should have been dropped during "
                              "cleaning");
        }
        if (present == n) continue;
        const double mean = sum / static_cast<double>(present);
        for (std::size_t r = 0; r < n; ++r) {
            if (std::isnan(table.at(r, c))) table.at(r, c) = mean;
        }
    }
}

void parse_dates(FeatureTable& table) {
    const std::size_t n = table.n_rows();
    table.dates.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        auto date = Date::parse(table.date_text[r]);
        if (!date) {
            throw FileError("row " + std::to_string(r + 1) + ": unparseable date '" +
                            table.date_text[r] + "'");
        }
        table.dates[r] = *date;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (table.dates[a] != table.dates[b]) return table.dates[a] < table.dates[b];
        return table.locations[a] < table.locations[b];
    });

    FeatureTable sorted;
    sorted.feature_names = table.feature_names;
    const std::size_t f = table.n_features();
    sorted.date_text.resize(n);
    sorted.dates.resize(n);
    sorted.locations.resize(n);
    sorted.values.resize(n * f);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t src = order[i];
        sorted.date_text[i] = std::move(table.date_text[src]);
        sorted.dates[i] = table.dates[src];
        sorted.locations[i] = std::move(table.locations[src]);
        std::copy_n(table.values.begin() + static_cast<std::ptrdiff_t>(src * f), f,
                    sorted.values.begin() + static_cast<std::ptrdiff_t>(i * f));
    }
    table = std::move(sorted);
}

std::vector<TornadoEvent> load_events_csv(const std::string& path) {
    CsvTable raw = read_csv(path);
    const int date_col = find_date_column(raw);
    const int loc_col = find_location_column(raw);
    const int mag_col = raw.column_index("magnitude");
    if (date_col < 0 || loc_col < 0 || mag_col < 0) {
        throw SchemaError(path + ": events file needs date, location_id and magnitude columns");
    }
    const int lat_col = raw.column_index("latitude");
    const int lon_col = raw.column_index("longitude");

    std::vector<TornadoEvent> events;
    events.reserve(raw.n_rows());
    for (std::size_t r = 0; r < raw.n_rows(); ++r) {
        TornadoEvent ev;
        auto date = Date::parse(raw.rows[r][static_cast<std::size_t>(date_col)]);
        if (!date) {
            throw FileError(path + ": row " + std::to_string(r + 1) + ": unparseable date '" +
                            raw.rows[r][static_cast<std::size_t>(date_col)] + "'");
        }
        ev.date = *date;
        ev.location_id = raw.rows[r][static_cast<std::size_t>(loc_col)];
        const std::string& mag = raw.rows[r][static_cast<std::size_t>(mag_col)];
        if (is_missing(mag) || lower(trim(mag)) == "unknown") {
            ev.magnitude = kMagnitudeUnknown;
        } else {
            auto value = parse_number(mag);
            if (!value || *value < 0 || *value > 5 || *value != std::floor(*value)) {
                throw FileError(path + ": row " + std::to_string(r + 1) + ": bad magnitude '" +
                                mag + "'");
            }
            ev.magnitude = static_cast<int>(*value);
        }
        if (lat_col >= 0) {
            if (auto v = parse_number(raw.rows[r][static_cast<std::size_t>(lat_col)])) {
                ev.latitude = *v;
            }
        }
        if (lon_col >= 0) {
            if (auto v = parse_number(raw.rows[r][static_cast<std::size_t>(lon_col)])) {
                ev.longitude = *v;
            }
        }
        events.push_back(std::move(ev));
    }
    return events;
}

std::pair<Dataset, DroppedEventsReport> join_label(const FeatureTable& weather,
                                                   const std::vector<TornadoEvent>& events) {
    if (weather.dates.size() != weather.n_rows()) {
        throw SchemaError("join_label requires date-parsed weather data");
    }

    std::unordered_set<std::string> weather_keys;
    weather_keys.reserve(weather.n_rows() * 2);
    for (std::size_t r = 0; r < weather.n_rows(); ++r) {
        weather_keys.insert(join_key(weather.dates[r].serial(), weather.locations[r]));
    }

    std::unordered_set<std::string> event_keys;
    DroppedEventsReport dropped;
    for (const TornadoEvent& ev : events) {
        const std::string key = join_key(ev.date.serial(), ev.location_id);
        if (weather_keys.count(key)) {
            event_keys.insert(key);
        } else {
            ++dropped.count;
            if (dropped.examples.size() < 10) dropped.examples.push_back(ev);
        }
    }

    Dataset out;
    out.feature_names = weather.feature_names;
    out.dates = weather.dates;
    out.locations = weather.locations;
    out.features = weather.values;
    out.labels.resize(weather.n_rows());
    for (std::size_t r = 0; r < weather.n_rows(); ++r) {
        const std::string key = join_key(weather.dates[r].serial(), weather.locations[r]);
        out.labels[r] = event_keys.count(key) ? 1 : 0;
    }
    return {std::move(out), std::move(dropped)};
}

DatasetSummary summarize(const Dataset& samples) {
    DatasetSummary summary;
    summary.n_features = samples.n_features();
    for (std::size_t r = 0; r < samples.n_rows(); ++r) {
        const int year = samples.dates[r].year();
        summary.rows_per_year[year] += 1;
        summary.tornado_per_year[year] += samples.labels[r];
        summary.total_rows += 1;
        summary.total_positives += samples.labels[r];
    }
    // years with rows but no tornado still appear in the tornado map
    for (const auto& [year, _] : summary.rows_per_year) summary.tornado_per_year[year];
    return summary;
}

std::vector<std::string> range_violations(const FeatureTable& table, std::size_t max_messages) {
    std::vector<std::string> messages;
    for (const WeatherColumnSpec& spec : weather_schema()) {
        int col = -1;
        for (std::size_t c = 0; c < table.n_features(); ++c) {
            if (table.feature_names[c] == spec.name) {
                col = static_cast<int>(c);
                break;
            }
        }
        if (col < 0) continue;
        for (std::size_t r = 0; r < table.n_rows(); ++r) {
            const double v = table.at(r, static_cast<std::size_t>(col));
            if (std::isnan(v)) continue;
            bool bad = false;
            if (!std::isnan(spec.lo)) bad |= spec.lo_open ? v <= spec.lo : v < spec.lo;
            if (!std::isnan(spec.hi)) bad |= spec.hi_open ? v >= spec.hi : v > spec.hi;
            if (bad) {
                if (messages.size() >= max_messages) return messages;
                messages.push_back(std::string(spec.name) + " out of range at row " +
                                   std::to_string(r + 1) + ": " + format_double(v));
            }
        }
    }
    return messages;
}

WeatherRecord weather_record_at(const FeatureTable& table, std::size_t row) {
    WeatherRecord rec;
    if (row < table.dates.size()) rec.date = table.dates[row];
    rec.location_id = table.locations[row];

    std::unordered_map<std::string, double*> fields = {
        {"temp_max", &rec.temp_max},
        {"temp_min", &rec.temp_min},
        {"temp_avg", &rec.temp_avg},
        {"feels_like", &rec.feels_like},
        {"dew_point", &rec.dew_point},
        {"humidity", &rec.humidity},
        {"precip_amount", &rec.precip_amount},
        {"precip_prob", &rec.precip_prob},
        {"precip_cover", &rec.precip_cover},
        {"wind_speed", &rec.wind_speed},
        {"wind_dir", &rec.wind_dir},
        {"sea_level_pressure", &rec.sea_level_pressure},
        {"cloud_cover", &rec.cloud_cover},
        {"visibility", &rec.visibility},
        {"moon_phase", &rec.moon_phase},
    };
    for (std::size_t c = 0; c < table.n_features(); ++c) {
        const double v = table.at(row, c);
        auto it = fields.find(table.feature_names[c]);
        if (it != fields.end()) {
            *it->second = v;
        } else {
            rec.extras.emplace_back(table.feature_names[c], v);
        }
    }
    return rec;
}

CsvTable to_raw(const FeatureTable& table) {
    CsvTable raw;
    raw.header.push_back("date");
    raw.header.push_back("location_id");
    for (const auto& name : table.feature_names) raw.header.push_back(name);

    const bool parsed = table.dates.size() == table.n_rows();
    raw.rows.resize(table.n_rows());
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        auto& row = raw.rows[r];
        row.reserve(2 + table.n_features());
        row.push_back(parsed ? table.dates[r].to_string() : table.date_text[r]);
        row.push_back(table.locations[r]);
        for (std::size_t c = 0; c < table.n_features(); ++c) {
            const double v = table.at(r, c);
            row.push_back(std::isnan(v) ? std::string() : format_double(v));
        }
    }
    return raw;
}

void save_dataset(const std::string& path, const Dataset& dataset) {
    CsvTable raw;
    raw.header.push_back("date");
    raw.header.push_back("location_id");
    for (const auto& name : dataset.feature_names) raw.header.push_back(name);
    raw.header.push_back("result");

    raw.rows.resize(dataset.n_rows());
    for (std::size_t r = 0; r < dataset.n_rows(); ++r) {
        auto& row = raw.rows[r];
        row.reserve(3 + dataset.n_features());
        row.push_back(dataset.dates[r].to_string());
        row.push_back(dataset.locations[r]);
        for (std::size_t c = 0; c < dataset.n_features(); ++c) {
            row.push_back(format_double(dataset.at(r, c)));
        }
        row.push_back(std::to_string(dataset.labels[r]));
    }
    write_csv(path, raw);
}

Dataset load_dataset(const std::string& path, bool require_label) {
    CsvTable raw = read_csv(path);
    if (raw.n_cols() < 3 || lower(raw.header[0]) != "date" ||
        lower(raw.header[1]) != "location_id") {
        throw SchemaError(path + ": expected canonical header date,location_id,<features>,result");
    }
    const bool has_label = lower(raw.header.back()) == "result";
    if (require_label && !has_label) {
        throw SchemaError(path + ": missing result column");
    }

    Dataset out;
    const std::size_t f = raw.n_cols() - 2 - (has_label ? 1 : 0);
    if (f == 0) throw SchemaError(path + ": no feature columns");
    out.feature_names.assign(raw.header.begin() + 2,
                             raw.header.begin() + 2 + static_cast<std::ptrdiff_t>(f));
    out.dates.reserve(raw.n_rows());
    out.locations.reserve(raw.n_rows());
    out.features.reserve(raw.n_rows() * f);
    out.labels.reserve(raw.n_rows());

    for (std::size_t r = 0; r < raw.n_rows(); ++r) {
        const auto& row = raw.rows[r];
        auto date = Date::parse(row[0]);
        if (!date) {
            throw FileError(path + ": row " + std::to_string(r + 1) + ": unparseable date '" +
                            row[0] + "'");
        }
        out.dates.push_back(*date);
        out.locations.push_back(row[1]);
        for (std::size_t c = 0; c < f; ++c) {
            auto v = parse_number(row[2 + c]);
            if (!v) {
                throw FileError(path + ": row " + std::to_string(r + 1) +
                                ": non-numeric feature '" + row[2 + c] + "' in column " +
                                out.feature_names[c]);
            }
            out.features.push_back(*v);
        }
        if (has_label) {
            const std::string& label = row.back();
            if (label != "0" && label != "1") {
                throw FileError(path + ": row " + std::to_string(r + 1) + ": result must be 0 or 1, got '" +
                                label + "'");
            }
            out.labels.push_back(label == "1" ? 1 : 0);
        } else {
            out.labels.push_back(0);
        }
    }
    return out;
}

std::string drop_reports_to_json(const ColumnDropReport& columns,
                                 const DroppedEventsReport& events,
                                 const DatasetSummary& summary) {
    nlohmann::json j;
    j["dropped_columns"] = nlohmann::json::array();
    for (const auto& entry : columns.dropped) {
        j["dropped_columns"].push_back({{"name", entry.name}, {"reason", entry.reason}});
    }
    j["dropped_events"]["count"] = events.count;
    j["dropped_events"]["examples"] = nlohmann::json::array();
    for (const auto& ev : events.examples) {
        nlohmann::json e{{"date", ev.date.to_string()},
                         {"location_id", ev.location_id},
                         {"magnitude", ev.magnitude}};
        j["dropped_events"]["examples"].push_back(e);
    }
    nlohmann::json rows = nlohmann::json::object();
    nlohmann::json tornado = nlohmann::json::object();
    for (const auto& [year, count] : summary.rows_per_year) rows[std::to_string(year)] = count;
    for (const auto& [year, count] : summary.tornado_per_year)
        tornado[std::to_string(year)] = count;
    j["summary"] = {{"rows_per_year", rows},
                    {"tornado_per_year", tornado},
                    {"total_rows", summary.total_rows},
                    {"total_positives", summary.total_positives},
                    {"n_features", summary.n_features}};
    return j.dump(2);
}

}  // namespace tornadocast
