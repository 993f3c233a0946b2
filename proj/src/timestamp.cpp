#include "olac/timestamp.hpp"

#include <chrono>
#include <cstdio>

namespace olac {

namespace {

// Civil-date conversions for a proleptic Gregorian calendar.
std::int64_t days_from_civil(std::int64_t y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const int yoe = static_cast<int>(y - era * 400);
    const int doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const int doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + doe - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const int doe = static_cast<int>(z - era * 146097);
    const int yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = yoe + era * 400;
    const int doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const int mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y += m <= 2;
}

int days_in_month(std::int64_t y, int m) {
    static const int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && ((y % 4 == 0 && y % 100 != 0) || y % 400 == 0))
        return 29;
    return lengths[m - 1];
}

bool scan_number(std::string_view text, size_t pos, size_t len, int& out) {
    if (pos + len > text.size())
        return false;
    out = 0;
    for (size_t i = pos; i < pos + len; ++i) {
        char c = text[i];
        if (c < '0' || c > '9')
            return false;
        out = out * 10 + (c - '0');
    }
    return true;
}

} // namespace

UtcTimestamp UtcTimestamp::parse(std::string_view text) {
    int year, month, day, hour = 0, minute = 0, second = 0;
    bool ok = scan_number(text, 0, 4, year) && text.size() > 4 && text[4] == '-'
              && scan_number(text, 5, 2, month) && text.size() > 7 && text[7] == '-'
              && scan_number(text, 8, 2, day);
    if (ok && text.size() == 10) {
        // date-only form, normalized to 00:00:00
    } else if (ok && text.size() == 20 && text[10] == 'T' && text[13] == ':' && text[16] == ':' && text[19] == 'Z') {
        ok = scan_number(text, 11, 2, hour) && scan_number(text, 14, 2, minute) && scan_number(text, 17, 2, second);
    } else {
        ok = false;
    }
    if (!ok)
        throw BadTimestampError("malformed UTC timestamp '" + std::string(text) + "'");
    if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month)
        || hour > 23 || minute > 59 || second > 59)
        throw BadTimestampError("timestamp field out of range in '" + std::string(text) + "'");
    return UtcTimestamp(days_from_civil(year, month, day) * 86400 + hour * 3600 + minute * 60 + second);
}

UtcTimestamp UtcTimestamp::now() {
    auto t = std::chrono::system_clock::now().time_since_epoch();
    return UtcTimestamp(std::chrono::duration_cast<std::chrono::seconds>(t).count());
}

std::string UtcTimestamp::to_string() const {
    std::int64_t days = seconds_ / 86400;
    std::int64_t rem = seconds_ % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    std::int64_t year;
    int month, day;
    civil_from_days(days, year, month, day);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04lld-%02d-%02dT%02lld:%02lld:%02lldZ",
                  static_cast<long long>(year), month, day,
                  static_cast<long long>(rem / 3600), static_cast<long long>(rem % 3600 / 60),
                  static_cast<long long>(rem % 60));
    return buf;
}

} // namespace olac
