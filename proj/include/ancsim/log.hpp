#pragma once

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

namespace ancsim {

enum class LogLevel { Quiet = 0, Error, Warn, Info, Debug };

/// Reads ANCSIM_LOG (quiet, error, warn, info, debug). Unset or unknown means warn.
inline LogLevel log_level_from_env() {
    const char* v = std::getenv("ANCSIM_LOG");
    if (!v) return LogLevel::Warn;
    const std::string_view s(v);
    if (s == "quiet") return LogLevel::Quiet;
    if (s == "error") return LogLevel::Error;
    if (s == "info") return LogLevel::Info;
    if (s == "debug") return LogLevel::Debug;
    return LogLevel::Warn;
}

inline LogLevel& log_threshold() {
    static LogLevel level = log_level_from_env();
    return level;
}

inline void log(LogLevel level, std::string_view msg) {
    if (level > log_threshold() || level == LogLevel::Quiet) return;
    static std::mutex m;
    static constexpr std::string_view names[] = {"", "error", "warn", "info", "debug"};
    std::lock_guard lock(m);
    std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << '\n';
}

} // namespace ancsim
