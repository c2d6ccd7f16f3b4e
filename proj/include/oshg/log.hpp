#pragma once

#include <functional>
#include <iostream>
#include <string>

namespace oshg {

enum class LogLevel { debug = 0, info = 1, warning = 2, error = 3, off = 4 };

// Process-wide log threshold and sink. The CLI raises or lowers the level;
// tests silence it.
struct LogConfig {
  LogLevel level = LogLevel::warning;
  std::function<void(LogLevel, const std::string&)> sink = [](LogLevel lvl, const std::string& msg) {
    static constexpr const char* names[] = {"debug", "info", "warning", "error"};
    std::clog << "[oshg " << names[static_cast<int>(lvl)] << "] " << msg << '\n';
  };
};

inline LogConfig& log_config() {
  static LogConfig cfg;
  return cfg;
}

inline void log(LogLevel lvl, const std::string& msg) {
  auto& cfg = log_config();
  if (lvl < cfg.level || !cfg.sink) return;
  cfg.sink(lvl, msg);
}

inline void log_info(const std::string& msg) { log(LogLevel::info, msg); }
inline void log_warning(const std::string& msg) { log(LogLevel::warning, msg); }

}  // namespace oshg
