#pragma once

#include <spdlog/spdlog.h>

namespace meswarm::log {

using spdlog::debug;
using spdlog::error;
using spdlog::info;
using spdlog::trace;
using spdlog::warn;

}  // namespace meswarm::log
