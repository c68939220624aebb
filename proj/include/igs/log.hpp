#pragma once

#include <string_view>

namespace igs {

/// Writes "warning: <message>" to stderr unless warnings are silenced.
void warn(std::string_view message);

/// Silences warnings on the calling thread (used by tests and quiet runs).
void set_warnings_enabled(bool enabled);

/// Number of warnings emitted on the calling thread since start.
unsigned warning_count();

}  // namespace igs
