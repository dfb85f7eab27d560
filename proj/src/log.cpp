#include "tdad/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace tdad::log {

namespace {

Level parse_env() {
    const char* env = std::getenv("TDAD_LOG");
    if (env == nullptr) {
        return Level::warn;
    }
    const std::string v(env);
    if (v == "error") return Level::error;
    if (v == "info") return Level::info;
    if (v == "debug") return Level::debug;
    return Level::warn;
}

std::atomic<int>& current() {
    static std::atomic<int> level{static_cast<int>(parse_env())};
    return level;
}

const char* tag(Level level) {
    switch (level) {
    case Level::error: return "error";
    case Level::warn: return "warn";
    case Level::info: return "info";
    case Level::debug: return "debug";
    }
    return "?";
}

} // namespace

Level threshold() { return static_cast<Level>(current().load()); }

void set_threshold(Level level) { current().store(static_cast<int>(level)); }

void write(Level level, std::string_view message) {
    if (static_cast<int>(level) > current().load()) {
        return;
    }
    static std::mutex mu;
    std::lock_guard lock(mu);
    std::cerr << "[tdad " << tag(level) << "] " << message << '\n';
}

} // namespace tdad::log
