// SPDX-License-Identifier: Apache-2.0
#include "cfr/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace cfr {

namespace {
std::atomic<LogLevel> g_level{LogLevel::warn};
std::mutex g_mu;
}  // namespace

void set_log_level(LogLevel level) { g_level.store(level); }
LogLevel log_level() { return g_level.load(); }

void log(LogLevel level, std::string_view message) {
    if (level < g_level.load() || level == LogLevel::off) return;
    static constexpr const char* kNames[] = {"debug", "info", "warn", "error"};
    std::lock_guard lock(g_mu);
    std::cerr << '[' << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace cfr
