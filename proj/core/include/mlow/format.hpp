#pragma once

#include <string>
#include <string_view>

namespace mlow {

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

/// Strict full-string parse; returns false on trailing garbage, empty input,
/// or non-finite results.
bool parse_finite_double(std::string_view text, double& value);

}  // namespace mlow
