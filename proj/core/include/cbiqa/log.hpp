#pragma once

#include <string_view>

namespace cbiqa::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

void set_level(Level level);
Level level();

// Writes "[cbiqa] <level>: message" to stderr when enabled.
void write(Level level, std::string_view message);

inline void info(std::string_view message) { write(Level::info, message); }
inline void warn(std::string_view message) { write(Level::warn, message); }

}  // namespace cbiqa::log
