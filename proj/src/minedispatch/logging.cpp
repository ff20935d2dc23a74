#include "minedispatch/logging.hpp"

#include <cstdlib>
#include <mutex>
#include <string>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

namespace minedispatch {

void configure_logging() {
  static std::once_flag once;
  std::call_once(once, [] {
    auto logger = spdlog::stderr_logger_mt("minedispatch");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    const char* env = std::getenv("MINE_DISPATCH_LOG");
    const std::string level = env ? env : "info";
    spdlog::level::level_enum lvl = spdlog::level::from_str(level);
    if (lvl == spdlog::level::off && level != "off") lvl = spdlog::level::info;
    spdlog::set_level(lvl);
  });
}

}  // namespace minedispatch
