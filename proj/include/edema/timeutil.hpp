#pragma once

#include <cstdint>
#include <string>

namespace edema::timeutil {

/// Parses an ISO-8601 timestamp with minute resolution
/// ("YYYY-MM-DDTHH:MM", optional ":SS" and trailing "Z"; seconds are
/// truncated) into minutes since 1970-01-01T00:00. Throws ValidationError
/// on malformed input.
std::int64_t parse_iso_minutes(const std::string& text);

/// Inverse of parse_iso_minutes; always emits "YYYY-MM-DDTHH:MM".
std::string format_iso_minutes(std::int64_t minutes);

inline double minutes_to_days(std::int64_t minutes) {
    return static_cast<double>(minutes) / 1440.0;
}

}  // namespace edema::timeutil
