#include "tornadocast/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "tornadocast/csv.hpp"
#include "tornadocast/errors.hpp"
#include "tornadocast/rng.hpp"

namespace tornadocast {

namespace {

constexpr int kSynthLocations = 7;

std::string synth_location(std::size_t i) {
    return "L" + std::to_string(i % kSynthLocations + 1);
}

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double bayes_accuracy(double separability, double positive_rate) {
    const double p1 = positive_rate;
    const double p0 = 1.0 - positive_rate;
    if (separability <= 0.0) return std::max(p0, p1);
    const double tau = separability / 2.0 + std::log(p0 / p1) / separability;
    return p0 * normal_cdf(tau) + p1 * (1.0 - normal_cdf(tau - separability));
}

double bayes_auc(double separability) { return normal_cdf(separability / std::sqrt(2.0)); }

SynthResult generate(const SynthConfig& config) {
    if (config.n_samples == 0) throw std::invalid_argument("synth: n_samples must be positive");
    if (config.n_features < 2) throw std::invalid_argument("synth: n_features must be >= 2");
    if (!(config.tornado_rate > 0.0 && config.tornado_rate <= 0.5)) {
        throw std::invalid_argument("synth: tornado_rate must lie in (0, 0.5]");
    }
    if (config.separability < 0.0) throw std::invalid_argument("synth: separability must be >= 0");

    const std::size_t n = config.n_samples;
    const std::size_t f = config.n_features;
    const auto n_pos = static_cast<std::size_t>(
        std::llround(config.tornado_rate * static_cast<double>(n)));

    Rng rng(config.seed);
    std::vector<int> labels(n, 0);
    std::fill_n(labels.begin(), std::min(n_pos, n), 1);
    rng.shuffle(labels);

    std::vector<double> direction(f);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (double& d : direction) {
            d = rng.next_normal();
            norm += d * d;
        }
        norm = std::sqrt(norm);
    } while (norm < 1e-12);
    for (double& d : direction) d /= norm;

    SynthResult result;
    Dataset& data = result.samples;
    data.feature_names.reserve(f);
    for (std::size_t c = 0; c < f; ++c) data.feature_names.push_back("f" + std::to_string(c));
    data.features.resize(n * f);
    data.labels = labels;
    data.dates.reserve(n);
    data.locations.reserve(n);
    const Date base = Date::parse("2000-01-01").value();
    Date day = base;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && i % kSynthLocations == 0) day = day.next_day();
        data.dates.push_back(day);
        data.locations.push_back(synth_location(i));
        double* row = data.features.data() + i * f;
        for (std::size_t c = 0; c < f; ++c) row[c] = rng.next_normal();
        if (labels[i] == 1) {
            for (std::size_t c = 0; c < f; ++c) row[c] += config.separability * direction[c];
        }
    }

    SynthTruth& truth = result.truth;
    truth.direction = std::move(direction);
    truth.separability = config.separability;
    truth.tornado_rate = config.tornado_rate;
    truth.n_samples = n;
    truth.n_positives = n_pos;
    truth.seed = config.seed;
    truth.bayes_accuracy = bayes_accuracy(config.separability, config.tornado_rate);
    truth.bayes_auc = bayes_auc(config.separability);
    truth.bayes_threshold =
        config.separability > 0.0
            ? config.separability / 2.0 +
                  std::log((1.0 - config.tornado_rate) / config.tornado_rate) / config.separability
            : 0.0;
    return result;
}

std::string SynthTruth::to_json() const {
    nlohmann::json j;
    j["direction"] = direction;
    j["separability"] = separability;
    j["tornado_rate"] = tornado_rate;
    j["n_samples"] = n_samples;
    j["n_positives"] = n_positives;
    j["seed"] = seed;
    j["bayes_threshold"] = bayes_threshold;
    j["bayes_accuracy"] = bayes_accuracy;
    j["bayes_auc"] = bayes_auc;
    return j.dump(2);
}

namespace {

// yearly storm counts reported for the 1998-2007 archive
struct FixtureYear {
    int year;
    int storms;
};
constexpr FixtureYear kFixtureYears[] = {
    {1998, 491}, {1999, 425}, {2000, 413}, {2001, 405}, {2002, 336},
    {2003, 398}, {2004, 489}, {2005, 380}, {2006, 363}, {2007, 381},
};
constexpr int kFixtureStations = 49;

std::string station_name(int i) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "STN%02d", i + 1);
    return buf;
}

bool is_leap_year(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

std::string hhmmss(double hours) {
    const int total = static_cast<int>(std::lround(hours * 3600.0));
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02d:%02d:%02d", total / 3600, (total / 60) % 60, total % 60);
    return buf;
}

}  // namespace

void write_archive_fixture(const std::string& weather_path, const std::string& events_path,
                           std::uint64_t seed) {
    std::ofstream weather(weather_path);
    if (!weather) throw FileError("cannot write fixture file: " + weather_path);
    weather << "date,location_id,temp_max,temp_min,temp_avg,feels_like,dew_point,humidity,"
               "precip_amount,precip_prob,precip_cover,precip_type,snow,snow_depth,wind_gust,"
               "wind_speed,wind_dir,sea_level_pressure,cloud_cover,visibility,solar_radiation,"
               "solar_energy,uv_index,severe_risk,sunrise,sunset,moon_phase,conditions,"
               "description,icon\n";

    Rng rng(seed);
    std::string line;
    line.reserve(512);
    auto cell = [&line](double v) {
        line += ',';
        line += format_double(v);
    };
    for (const FixtureYear& fy : kFixtureYears) {
        const int days = is_leap_year(fy.year) ? 366 : 365;
        Date date = Date::parse(std::to_string(fy.year) + "-01-01").value();
        for (int d = 0; d < days; ++d) {
            const double season = std::sin(2.0 * M_PI * (d - 100) / 365.0);
            const double daylight = 12.0 + 2.5 * season;
            const std::string sunrise = hhmmss(12.0 - daylight / 2.0);
            const std::string sunset = hhmmss(12.0 + daylight / 2.0);
            const double moon = std::fmod(static_cast<double>(date.serial()) / 29.53, 1.0);
            for (int s = 0; s < kFixtureStations; ++s) {
                line.clear();
                line += date.to_string();
                line += ',';
                line += station_name(s);

                const double temp_avg = 15.0 + 12.0 * season + rng.next_normal() * 4.0;
                const double temp_max = temp_avg + 2.0 + std::abs(rng.next_normal()) * 3.0;
                const double temp_min = temp_avg - 2.0 - std::abs(rng.next_normal()) * 3.0;
                const double feels = temp_avg + rng.next_normal() * 2.0;
                const double dew = temp_avg - 2.0 - std::abs(rng.next_normal()) * 5.0;
                const double humidity = clamp(60.0 + rng.next_normal() * 18.0, 0.0, 100.0);
                const bool raining = rng.next_double() < 0.4;
                const double precip = raining ? std::abs(rng.next_normal()) * 8.0 : 0.0;
                const double precip_prob =
                    clamp((raining ? 60.0 : 15.0) + rng.next_normal() * 15.0, 0.0, 100.0);
                const double precip_cover =
                    raining ? clamp(30.0 + rng.next_normal() * 20.0, 0.0, 100.0) : 0.0;
                const bool snowing = raining && temp_avg < 2.0;
                const double snow = snowing ? std::abs(rng.next_normal()) * 3.0 : 0.0;
                const double snow_depth = snowing ? snow * (1.0 + rng.next_double()) : 0.0;
                const double wind_speed = std::abs(8.0 + rng.next_normal() * 5.0);
                const double wind_gust = wind_speed * (1.3 + std::abs(rng.next_normal()) * 0.3);
                const double wind_dir = rng.uniform(0.0, 360.0);
                const double pressure = 1013.0 + rng.next_normal() * 8.0;
                const double cloud = clamp(50.0 + rng.next_normal() * 30.0, 0.0, 100.0);
                const double visibility = clamp(10.0 + rng.next_normal() * 4.0, 0.0, 30.0);
                const double solar_rad =
                    clamp(200.0 + 150.0 * season + rng.next_normal() * 50.0, 0.0, 1000.0);
                const double solar_energy = solar_rad * 0.0864 * (0.8 + 0.4 * rng.next_double());
                const double uv = clamp(std::round(solar_rad / 90.0), 0.0, 11.0);

                cell(temp_max);
                cell(temp_min);
                cell(temp_avg);
                cell(feels);
                cell(dew);
                cell(humidity);
                cell(precip);
                cell(precip_prob);
                cell(precip_cover);
                line += ',';
                line += raining ? (snowing ? "snow" : "rain") : "";
                cell(snow);
                cell(snow_depth);
                if (rng.next_double() < 0.25) {
                    line += ',';  // wind_gust missing, imputation fodder
                } else {
                    cell(wind_gust);
                }
                cell(wind_speed);
                cell(wind_dir);
                if (rng.next_double() < 0.02) {
                    line += ',';
                } else {
                    cell(pressure);
                }
                cell(cloud);
                cell(visibility);
                cell(solar_rad);
                cell(solar_energy);
                cell(uv);
                if (rng.next_double() < 0.7) {
                    line += ",";  // severe_risk: sparse, dropped by the cleaner
                } else {
                    cell(clamp(10.0 + std::abs(rng.next_normal()) * 20.0, 5.0, 100.0));
                }
                line += ',';
                line += sunrise;
                line += ',';
                line += sunset;
                cell(moon);
                const char* conditions = snowing          ? "Snow, Overcast"
                                         : raining        ? "Rain, Partially cloudy"
                                         : cloud > 75.0   ? "Overcast"
                                         : cloud > 40.0   ? "Partially cloudy"
                                                          : "Clear";
                line += ',';
                line += '"';
                line += conditions;
                line += '"';
                line += ",Typical conditions for the season,";
                line += snowing ? "snow" : raining ? "rain" : "clear-day";
                line += '\n';
                weather << line;
            }
            date = date.next_day();
        }
    }
    if (!weather.good()) throw FileError("failed writing fixture file: " + weather_path);
    weather.close();

    // storm events: per-year counts drawn without replacement over the
    // (day, station) grid, plus a few out-of-range rows the join must drop
    std::ofstream events(events_path);
    if (!events) throw FileError("cannot write fixture file: " + events_path);
    events << "date,location_id,magnitude,latitude,longitude\n";
    Rng event_rng(derive_seed(seed, 0xe0));
    for (const FixtureYear& fy : kFixtureYears) {
        const int days = is_leap_year(fy.year) ? 366 : 365;
        const std::size_t cells = static_cast<std::size_t>(days) * kFixtureStations;
        std::vector<std::uint32_t> grid(cells);
        std::iota(grid.begin(), grid.end(), 0);
        // partial Fisher-Yates: the first `storms` entries are the draw
        for (int i = 0; i < fy.storms; ++i) {
            const std::size_t j =
                static_cast<std::size_t>(i) +
                static_cast<std::size_t>(event_rng.next_below(cells - static_cast<std::size_t>(i)));
            std::swap(grid[static_cast<std::size_t>(i)], grid[j]);
        }
        std::sort(grid.begin(), grid.begin() + fy.storms);
        const Date year_start = Date::parse(std::to_string(fy.year) + "-01-01").value();
        for (int i = 0; i < fy.storms; ++i) {
            const std::uint32_t cell_id = grid[static_cast<std::size_t>(i)];
            Date date = year_start;
            for (std::uint32_t d = 0; d < cell_id / kFixtureStations; ++d) date = date.next_day();
            const int station = static_cast<int>(cell_id % kFixtureStations);
            const int magnitude = static_cast<int>(event_rng.next_below(6));
            const double lat = 30.0 + event_rng.next_double() * 15.0;
            const double lon = -105.0 + event_rng.next_double() * 20.0;
            events << date.to_string() << ',' << station_name(station) << ',' << magnitude << ','
                   << format_double(lat) << ',' << format_double(lon) << '\n';
        }
    }
    for (int i = 0; i < 3; ++i) {
        events << "2008-0" << (i + 1) << "-15,STN01," << i << ",35.1,-97.4\n";
    }
    if (!events.good()) throw FileError("failed writing fixture file: " + events_path);
}

}  // namespace tornadocast
