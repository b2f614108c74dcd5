#include "tornadocast/date.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

namespace tornadocast {

namespace {

// Parses [begin, end) as a plain unsigned integer; rejects signs and spaces.
std::optional<int> parse_int(const char* begin, const char* end) {
    if (begin == end) return std::nullopt;
    int value = 0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return value;
}

}  // namespace

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", year(), month(), day());
    return buf;
}

std::optional<Date> Date::parse(const std::string& text) {
    const char* s = text.data();
    const std::size_t n = text.size();

    // ISO: YYYY-MM-DD
    if (n == 10 && s[4] == '-' && s[7] == '-') {
        auto y = parse_int(s, s + 4);
        auto m = parse_int(s + 5, s + 7);
        auto d = parse_int(s + 8, s + 10);
        if (y && m && d) {
            Date date(*y, static_cast<unsigned>(*m), static_cast<unsigned>(*d));
            if (date.ok()) return date;
        }
        return std::nullopt;
    }

    // M/D/YYYY with one- or two-digit month and day
    std::size_t slash1 = text.find('/');
    if (slash1 == std::string::npos) return std::nullopt;
    std::size_t slash2 = text.find('/', slash1 + 1);
    if (slash2 == std::string::npos) return std::nullopt;
    auto m = parse_int(s, s + slash1);
    auto d = parse_int(s + slash1 + 1, s + slash2);
    auto y = parse_int(s + slash2 + 1, s + n);
    if (!(y && m && d)) return std::nullopt;
    if (*m < 1 || *d < 1) return std::nullopt;
    Date date(*y, static_cast<unsigned>(*m), static_cast<unsigned>(*d));
    if (!date.ok()) return std::nullopt;
    return date;
}

}  // namespace tornadocast
