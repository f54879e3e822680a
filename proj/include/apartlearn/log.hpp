#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace apartlearn {

enum class LogLevel { off = 0, error = 1, warn = 2, info = 3, debug = 4 };

// Level comes from APARTLEARN_LOG (off|error|warn|info|debug), default warn.
inline LogLevel log_level() {
    static LogLevel level = [] {
        const char* env = std::getenv("APARTLEARN_LOG");
        if (!env) return LogLevel::warn;
        if (std::strcmp(env, "off") == 0) return LogLevel::off;
        if (std::strcmp(env, "error") == 0) return LogLevel::error;
        if (std::strcmp(env, "warn") == 0) return LogLevel::warn;
        if (std::strcmp(env, "info") == 0) return LogLevel::info;
        if (std::strcmp(env, "debug") == 0) return LogLevel::debug;
        return LogLevel::warn;
    }();
    return level;
}

inline void log_msg(LogLevel level, const std::string& msg) {
    if (level > log_level()) return;
    const char* tag = level == LogLevel::error ? "error"
                    : level == LogLevel::warn  ? "warn"
                    : level == LogLevel::info  ? "info"
                                               : "debug";
    std::fprintf(stderr, "[apartlearn %s] %s\n", tag, msg.c_str());
}

} // namespace apartlearn
