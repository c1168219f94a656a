#include "trapmodes/log.hpp"

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace trapmodes::logging {

static Level parse_env() {
    const char* env = std::getenv("TRAPMODES_LOG");
    if (!env) return Level::warn;
    if (std::strcmp(env, "error") == 0) return Level::error;
    if (std::strcmp(env, "warn") == 0) return Level::warn;
    if (std::strcmp(env, "info") == 0) return Level::info;
    if (std::strcmp(env, "debug") == 0) return Level::debug;
    std::fprintf(stderr, "[warn ] unknown TRAPMODES_LOG value '%s', using warn\n", env);
    return Level::warn;
}

Level threshold() {
    static const Level cached = parse_env();
    return cached;
}

bool enabled(Level level) {
    return static_cast<int>(level) <= static_cast<int>(threshold());
}

void write(Level level, const char* fmt, ...) {
    static const char* tags[] = {"error", "warn ", "info ", "debug"};
    std::fprintf(stderr, "[%s] ", tags[static_cast<int>(level)]);
    va_list args;
    va_start(args, fmt);
    std::vfprintf(stderr, fmt, args);
    va_end(args);
    std::fputc('\n', stderr);
}

}  // namespace trapmodes::logging
