// UTC timestamps at second granularity, the datestamp currency of the
// whole toolkit. Serialized form is YYYY-MM-DDThh:mm:ssZ; date-only
// input is accepted and normalized to midnight.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace olac {

struct BadTimestampError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class UtcTimestamp {
public:
    UtcTimestamp() = default;
    explicit UtcTimestamp(std::int64_t seconds_since_epoch) : seconds_(seconds_since_epoch) {}

    // Accepts "YYYY-MM-DDThh:mm:ssZ" or "YYYY-MM-DD". Throws BadTimestampError.
    static UtcTimestamp parse(std::string_view text);
    static UtcTimestamp now();

    std::string to_string() const;
    std::int64_t seconds() const { return seconds_; }

    auto operator<=>(const UtcTimestamp&) const = default;

private:
    std::int64_t seconds_ = 0;
};

} // namespace olac
