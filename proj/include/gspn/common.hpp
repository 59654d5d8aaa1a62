#pragma once

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace gspn {

// Data or schema problem (bad file, out-of-range value, shape mismatch).
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Observed evidence has probability exactly zero under the current parameters.
class ImpossibleEvidenceError : public std::runtime_error {
public:
  explicit ImpossibleEvidenceError(const std::string& what) : std::runtime_error(what) {}
};

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

// Level comes from the GSPN_LOG env var (debug|info|warn|error|off), default warn.
inline LogLevel log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("GSPN_LOG");
    if (!env) return LogLevel::Warn;
    std::string v(env);
    if (v == "debug") return LogLevel::Debug;
    if (v == "info") return LogLevel::Info;
    if (v == "warn") return LogLevel::Warn;
    if (v == "error") return LogLevel::Error;
    if (v == "off") return LogLevel::Off;
    return LogLevel::Warn;
  }();
  return level;
}

inline void log_msg(LogLevel level, const std::string& msg) {
  static const char* names[] = {"debug", "info", "warn", "error"};
  if (level >= log_level() && level != LogLevel::Off) {
    std::cerr << "[gspn:" << names[static_cast<int>(level)] << "] " << msg << "\n";
  }
}

}  // namespace gspn
