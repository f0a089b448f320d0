#pragma once

#include <iostream>
#include <mutex>
#include <string_view>

namespace fmtl::log {

inline std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

inline bool& quiet() {
  static bool q = false;
  return q;
}

inline void warn(std::string_view msg) {
  if (quiet()) return;
  std::lock_guard lock(sink_mutex());
  std::cerr << "warning: " << msg << '\n';
}

inline void info(std::string_view msg) {
  if (quiet()) return;
  std::lock_guard lock(sink_mutex());
  std::cerr << msg << '\n';
}

}  // namespace fmtl::log
