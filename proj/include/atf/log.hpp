#pragma once

#include <functional>
#include <string_view>

namespace atf {

enum class LogLevel { debug, info, warning, error };

using LogSink = std::function<void(LogLevel, std::string_view)>;

/// Replaces the process-wide sink (default: warnings and errors to stderr).
/// Passing an empty function silences logging.
void set_log_sink(LogSink sink);

void log(LogLevel level, std::string_view message);

inline void log_warning(std::string_view message) { log(LogLevel::warning, message); }

} // namespace atf
