#pragma once

#include <atomic>
#include <iostream>
#include <mutex>
#include <string_view>

namespace gsuq::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

inline std::atomic<Level>& threshold() {
  static std::atomic<Level> level{Level::warn};
  return level;
}

inline void set_level(Level level) { threshold().store(level); }

inline void write(Level level, std::string_view msg) {
  if (level < threshold().load()) return;
  static std::mutex mutex;
  static constexpr const char* kTags[] = {"debug", "info", "warn", "error", ""};
  std::lock_guard lock(mutex);
  std::cerr << "[gsuq:" << kTags[static_cast<int>(level)] << "] " << msg << '\n';
}

inline void debug(std::string_view msg) { write(Level::debug, msg); }
inline void info(std::string_view msg) { write(Level::info, msg); }
inline void warn(std::string_view msg) { write(Level::warn, msg); }

}  // namespace gsuq::log
