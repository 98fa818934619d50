#include "nln/log.hpp"

#include <iostream>

namespace nln {

namespace {
log_level level_ = log_level::warning;
}

void set_log_level(log_level level) { level_ = level; }
log_level current_log_level() { return level_; }

void log_warning(const std::string& msg) {
  if (level_ >= log_level::warning) std::cerr << "warning: " << msg << '\n';
}

void log_info(const std::string& msg) {
  if (level_ >= log_level::info) std::cerr << msg << '\n';
}

}  // namespace nln
