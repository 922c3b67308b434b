#pragma once

#include <string_view>

namespace rankone::log {

// Verbosity comes from RANKONE_LOG (trace|debug|info|warn|error|off),
// default "warn". Messages go to stderr.
void init_from_env();

void debug(std::string_view msg);
void info(std::string_view msg);
void warn(std::string_view msg);

}  // namespace rankone::log
