#pragma once

#include <string>

namespace nln {

enum class log_level { quiet, warning, info };

void set_log_level(log_level level);
log_level current_log_level();
void log_warning(const std::string& msg);
void log_info(const std::string& msg);

}  // namespace nln
