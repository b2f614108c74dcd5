#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>

namespace tornadocast {

/// Calendar date at UTC day granularity. Thin wrapper over
/// std::chrono::year_month_day with parsing and a serial day number
/// for ordering and day arithmetic.
class Date {
public:
    Date() = default;
    Date(int year, unsigned month, unsigned day)
        : ymd_(std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}) {}

    bool ok() const { return ymd_.ok(); }
    int year() const { return static_cast<int>(ymd_.year()); }
    unsigned month() const { return static_cast<unsigned>(ymd_.month()); }
    unsigned day() const { return static_cast<unsigned>(ymd_.day()); }

    // Days since the civil epoch 1970-01-01; valid dates only.
    std::int64_t serial() const {
        return std::chrono::sys_days(ymd_).time_since_epoch().count();
    }

    Date next_day() const {
        auto d = std::chrono::sys_days(ymd_) + std::chrono::days{1};
        Date out;
        out.ymd_ = std::chrono::year_month_day(d);
        return out;
    }

    // "YYYY-MM-DD"
    std::string to_string() const;

    // Accepts ISO "YYYY-MM-DD" and "M/D/YYYY"; nullopt when the text does
    // not parse or names an impossible calendar day.
    static std::optional<Date> parse(const std::string& text);

    friend auto operator<=>(const Date& a, const Date& b) {
        return a.serial() <=> b.serial();
    }
    friend bool operator==(const Date& a, const Date& b) {
        return a.serial() == b.serial();
    }

private:
    std::chrono::year_month_day ymd_{};
};

}  // namespace tornadocast
