#include "igs/log.hpp"

#include <iostream>
#include <mutex>
#include <string>

namespace igs {
namespace {
thread_local bool t_enabled = true;
thread_local unsigned t_count = 0;
std::mutex g_stderr_mutex;
}  // namespace

void warn(std::string_view message) {
  ++t_count;
  if (!t_enabled) return;
  std::lock_guard lock(g_stderr_mutex);
  std::cerr << "warning: " << message << '\n';
}

void set_warnings_enabled(bool enabled) { t_enabled = enabled; }

unsigned warning_count() { return t_count; }

}  // namespace igs
