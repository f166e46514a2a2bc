#include "burst/log.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>
#include <string>

namespace burst {

namespace {

std::atomic<LogLevel> g_level{LogLevel::Warn};
std::mutex g_write_mutex;

const char* level_name(LogLevel level) {
    switch (level) {
        case LogLevel::Error: return "error";
        case LogLevel::Warn: return "warn";
        case LogLevel::Info: return "info";
        case LogLevel::Debug: return "debug";
    }
    return "?";
}

}  // namespace

void set_log_level(LogLevel level) { g_level.store(level, std::memory_order_relaxed); }

LogLevel log_level() { return g_level.load(std::memory_order_relaxed); }

bool log_enabled(LogLevel level) {
    return static_cast<int>(level) <= static_cast<int>(log_level());
}

std::optional<LogLevel> parse_log_level(std::string_view name) {
    if (name == "error") return LogLevel::Error;
    if (name == "warn") return LogLevel::Warn;
    if (name == "info") return LogLevel::Info;
    if (name == "debug") return LogLevel::Debug;
    return std::nullopt;
}

void log(LogLevel level, std::string_view message) {
    if (!log_enabled(level)) return;
    std::lock_guard<std::mutex> lock(g_write_mutex);
    std::fprintf(stderr, "[%s] %.*s\n", level_name(level),
                 static_cast<int>(message.size()), message.data());
}

void log_error(std::string_view message) { log(LogLevel::Error, message); }
void log_warn(std::string_view message) { log(LogLevel::Warn, message); }
void log_info(std::string_view message) { log(LogLevel::Info, message); }
void log_debug(std::string_view message) { log(LogLevel::Debug, message); }

}  // namespace burst
