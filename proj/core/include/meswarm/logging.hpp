#pragma once

#include <string>

namespace meswarm {

/// Routes library logs to stderr at the level named by ME_SWARM_LOG
/// (trace, debug, info, warn, err, critical, off; default warn).
void configure_logging();

void set_log_level(const std::string& level);

}  // namespace meswarm
