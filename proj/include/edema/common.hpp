#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace edema {

/// Raised when an input file, record, or configuration violates its schema.
/// The CLI maps this to exit code 1.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a computation becomes numerically meaningless (divergence,
/// degenerate variance, ...). The CLI maps this to exit code 2.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Ordinal pulmonary edema severity grade.
enum class Severity : int {
    none = 0,
    vascular_congestion = 1,
    interstitial_edema = 2,
    alveolar_edema = 3,
};

inline constexpr int kSeverityLevels = 4;

inline int severity_index(Severity s) { return static_cast<int>(s); }

inline Severity severity_from_int(int level) {
    if (level < 0 || level >= kSeverityLevels) {
        throw ValidationError("severity level out of range [0,3]: " + std::to_string(level));
    }
    return static_cast<Severity>(level);
}

inline const char* severity_name(Severity s) {
    switch (s) {
        case Severity::none: return "none";
        case Severity::vascular_congestion: return "vascular congestion";
        case Severity::interstitial_edema: return "interstitial edema";
        case Severity::alveolar_edema: return "alveolar edema";
    }
    return "?";
}

inline bool operator<(Severity a, Severity b) {
    return severity_index(a) < severity_index(b);
}

using OptionalSeverity = std::optional<Severity>;

}  // namespace edema
