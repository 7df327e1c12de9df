#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

namespace proxcat {

enum class LogLevel { off = 0, info = 1, debug = 2 };

/// Verbosity from the PROXCAT_LOG environment variable (off|info|debug).
inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("PROXCAT_LOG");
    if (!env) return LogLevel::off;
    const std::string v(env);
    if (v == "info") return LogLevel::info;
    if (v == "debug") return LogLevel::debug;
    return LogLevel::off;
  }();
  return level;
}

inline void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::info) std::fprintf(stderr, "[proxcat] %s\n", msg.c_str());
}

inline void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::debug) std::fprintf(stderr, "[proxcat:debug] %s\n", msg.c_str());
}

}  // namespace proxcat
