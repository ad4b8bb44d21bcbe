// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string_view>

namespace cfr {

enum class LogLevel { debug, info, warn, error, off };

void set_log_level(LogLevel level);
LogLevel log_level();

/// Writes one line to stderr when level is enabled.
void log(LogLevel level, std::string_view message);

inline void log_info(std::string_view m) { log(LogLevel::info, m); }
inline void log_warn(std::string_view m) { log(LogLevel::warn, m); }

}  // namespace cfr
