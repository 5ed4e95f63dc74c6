#pragma once

#include <iostream>
#include <mutex>
#include <sstream>
#include <string>

namespace alignkit {

namespace detail {
inline std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

inline void log_line(const char* level, const std::string& msg) {
  std::lock_guard<std::mutex> lock(detail::log_mutex());
  std::cerr << "[" << level << "] " << msg << "\n";
}

inline void log_warn(const std::string& msg) { log_line("warn", msg); }
inline void log_info(const std::string& msg) { log_line("info", msg); }

/// Periodic progress line for long-running verbs: "<what> <done>/<total>".
inline void log_progress(const std::string& what, std::size_t done, std::size_t total) {
  std::ostringstream os;
  os << what << " " << done << "/" << total;
  log_line("info", os.str());
}

}  // namespace alignkit
