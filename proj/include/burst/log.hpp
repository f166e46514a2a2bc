#pragma once

#include <optional>
#include <string_view>

namespace burst {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

void set_log_level(LogLevel level);
LogLevel log_level();
bool log_enabled(LogLevel level);
std::optional<LogLevel> parse_log_level(std::string_view name);

// All log output goes to stderr; stdout stays reserved for machine output.
void log(LogLevel level, std::string_view message);
void log_error(std::string_view message);
void log_warn(std::string_view message);
void log_info(std::string_view message);
void log_debug(std::string_view message);

}  // namespace burst
