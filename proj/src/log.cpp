#include "abaf/log.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>

namespace abaf {

namespace {
std::atomic<int> g_level{static_cast<int>(LogLevel::Warn)};
std::mutex g_mutex;

void emit(LogLevel level, const char* tag, const std::string& msg) {
    if (static_cast<int>(level) > g_level.load()) return;
    std::lock_guard lock(g_mutex);
    std::fprintf(stderr, "[%s] %s\n", tag, msg.c_str());
}
}  // namespace

void set_log_level(LogLevel level) { g_level.store(static_cast<int>(level)); }
LogLevel log_level() { return static_cast<LogLevel>(g_level.load()); }

void log_warn(const std::string& msg) { emit(LogLevel::Warn, "warn", msg); }
void log_info(const std::string& msg) { emit(LogLevel::Info, "info", msg); }
void log_debug(const std::string& msg) { emit(LogLevel::Debug, "debug", msg); }

}  // namespace abaf
