#include "selfpaced/log.hpp"

#include <atomic>
#include <iostream>
#include <map>
#include <mutex>

namespace selfpaced {

namespace {
std::atomic<LogLevel> g_level{LogLevel::warn};
std::mutex g_mutex;
std::map<std::string, std::size_t, std::less<>> g_counts;
}  // namespace

void set_log_level(LogLevel level) { g_level = level; }
LogLevel log_level() { return g_level; }

void log_info(std::string_view message) {
  if (g_level.load() < LogLevel::info) return;
  std::lock_guard lock(g_mutex);
  std::clog << "[info] " << message << '\n';
}

void log_warning(std::string_view message) {
  if (g_level.load() < LogLevel::warn) return;
  std::lock_guard lock(g_mutex);
  std::clog << "[warn] " << message << '\n';
}

void log_warning_once(std::string_view key, std::string_view message) {
  bool first = false;
  {
    std::lock_guard lock(g_mutex);
    auto it = g_counts.find(key);
    if (it == g_counts.end()) it = g_counts.emplace(std::string(key), 0).first;
    first = it->second++ == 0;
  }
  if (first) log_warning(message);
}

std::size_t warning_count(std::string_view key) {
  std::lock_guard lock(g_mutex);
  auto it = g_counts.find(key);
  return it == g_counts.end() ? 0 : it->second;
}

void reset_warning_counts() {
  std::lock_guard lock(g_mutex);
  g_counts.clear();
}

}  // namespace selfpaced
