#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace selfpaced {

enum class LogLevel { quiet, warn, info };

void set_log_level(LogLevel level);
LogLevel log_level();

void log_info(std::string_view message);
void log_warning(std::string_view message);

/// Prints the first warning per key and counts every call.
void log_warning_once(std::string_view key, std::string_view message);
std::size_t warning_count(std::string_view key);
void reset_warning_counts();

}  // namespace selfpaced
