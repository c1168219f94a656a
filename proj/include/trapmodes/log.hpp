#pragma once

namespace trapmodes::logging {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

/// Threshold parsed once from TRAPMODES_LOG (error|warn|info|debug), default warn.
Level threshold();

bool enabled(Level level);

/// printf-style message to stderr, prefixed with the level tag.
void write(Level level, const char* fmt, ...);

}  // namespace trapmodes::logging

#define TM_LOG(level, ...)                                                 \
    do {                                                                   \
        if (::trapmodes::logging::enabled(level))                          \
            ::trapmodes::logging::write(level, __VA_ARGS__);               \
    } while (0)

#define TM_ERROR(...) TM_LOG(::trapmodes::logging::Level::error, __VA_ARGS__)
#define TM_WARN(...) TM_LOG(::trapmodes::logging::Level::warn, __VA_ARGS__)
#define TM_INFO(...) TM_LOG(::trapmodes::logging::Level::info, __VA_ARGS__)
#define TM_DEBUG(...) TM_LOG(::trapmodes::logging::Level::debug, __VA_ARGS__)
