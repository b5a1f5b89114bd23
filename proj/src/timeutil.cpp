#include "edema/timeutil.hpp"

#include <array>
#include <charconv>
#include <cstdio>

#include "edema/common.hpp"

namespace edema::timeutil {

namespace {

// Days from 1970-01-01 for a civil date (Howard Hinnant's algorithm).
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

bool parse_fixed_int(const std::string& s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    auto res = std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return res.ec == std::errc() && res.ptr == s.data() + pos + len;
}

constexpr std::array<int, 13> kDaysInMonth = {0, 31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

}  // namespace

std::int64_t parse_iso_minutes(const std::string& text) {
    auto fail = [&]() -> std::int64_t {
        throw ValidationError("malformed timestamp: '" + text + "' (expected YYYY-MM-DDTHH:MM)");
    };
    int y, mo, d, h, mi;
    if (text.size() < 16) return fail();
    if (!parse_fixed_int(text, 0, 4, y) || text[4] != '-' ||
        !parse_fixed_int(text, 5, 2, mo) || text[7] != '-' ||
        !parse_fixed_int(text, 8, 2, d) || (text[10] != 'T' && text[10] != ' ') ||
        !parse_fixed_int(text, 11, 2, h) || text[13] != ':' ||
        !parse_fixed_int(text, 14, 2, mi)) {
        return fail();
    }
    std::size_t pos = 16;
    if (pos < text.size() && text[pos] == ':') {
        int sec;
        if (!parse_fixed_int(text, pos + 1, 2, sec)) return fail();
        pos += 3;
    }
    if (pos < text.size() && text[pos] == 'Z') pos += 1;
    if (pos != text.size()) return fail();

    int max_day = kDaysInMonth[mo >= 1 && mo <= 12 ? mo : 0] + (mo == 2 && is_leap(y) ? 1 : 0);
    if (mo < 1 || mo > 12 || d < 1 || d > max_day || h < 0 || h > 23 || mi < 0 || mi > 59) {
        return fail();
    }
    return days_from_civil(y, mo, d) * 1440 + h * 60 + mi;
}

std::string format_iso_minutes(std::int64_t minutes) {
    std::int64_t days = minutes / 1440;
    std::int64_t rem = minutes % 1440;
    if (rem < 0) {
        rem += 1440;
        days -= 1;
    }
    int y, mo, d;
    civil_from_days(days, y, mo, d);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d", y, mo, d,
                  static_cast<int>(rem / 60), static_cast<int>(rem % 60));
    return buf;
}

}  // namespace edema::timeutil
