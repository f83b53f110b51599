#pragma once

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <memory>
#include <string>

namespace bergman {

// Reads BERGMAN_LOG once; unset or unrecognized values fall back to "warn".
inline spdlog::level::level_enum log_level_from_env() {
  const char* raw = std::getenv("BERGMAN_LOG");
  if (raw == nullptr) return spdlog::level::warn;
  const std::string value(raw);
  if (value == "error") return spdlog::level::err;
  if (value == "warn") return spdlog::level::warn;
  if (value == "info") return spdlog::level::info;
  if (value == "debug") return spdlog::level::debug;
  return spdlog::level::warn;
}

inline spdlog::logger& logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto sink = std::make_shared<spdlog::sinks::stderr_sink_mt>();
    auto log = std::make_shared<spdlog::logger>("bergman", sink);
    log->set_level(log_level_from_env());
    log->set_pattern("[%l] %v");
    return log;
  }();
  return *instance;
}

}  // namespace bergman
