#include "meswarm/logging.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace meswarm {

void configure_logging() {
  static const bool once = [] {
    auto logger = spdlog::stderr_color_mt("meswarm");
    logger->set_pattern("[%Y-%m-%d %H:%M:%S.%e] [%^%l%$] %v");
    spdlog::set_default_logger(logger);
    return true;
  }();
  (void)once;
  const char* env = std::getenv("ME_SWARM_LOG");
  set_log_level(env != nullptr ? env : "warn");
}

void set_log_level(const std::string& level) {
  spdlog::set_level(spdlog::level::from_str(level));
}

}  // namespace meswarm
