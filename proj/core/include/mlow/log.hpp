#pragma once

#include <functional>
#include <string_view>

namespace mlow {

using WarningHandler = std::function<void(std::string_view)>;

/// Replaces the warning sink (default: one line on std::clog). Passing an
/// empty handler silences warnings. Returns the previous handler.
WarningHandler set_warning_handler(WarningHandler handler);

void log_warning(std::string_view message);

}  // namespace mlow
