#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <string>

#include "dsdst/error.h"
#include "dsdst/log.h"

namespace dsdst {

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kSchema: return "schema error";
    case ErrorKind::kRange: return "range error";
    case ErrorKind::kConfig: return "configuration error";
    case ErrorKind::kProjection: return "projection error";
    case ErrorKind::kShape: return "shape error";
    case ErrorKind::kDecode: return "decode error";
    case ErrorKind::kAlignment: return "alignment error";
    case ErrorKind::kCompatibility: return "compatibility error";
    case ErrorKind::kUsage: return "usage error";
    case ErrorKind::kTraining: return "training error";
    case ErrorKind::kIo: return "i/o error";
  }
  return "error";
}

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto log = spdlog::stderr_color_mt("dsdst");
    log->set_pattern("[%l] %v");
    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("DUAL_DST_LOG"); env != nullptr) {
      level = spdlog::level::from_str(env);
    }
    log->set_level(level);
    return log;
  }();
  return instance;
}

}  // namespace dsdst
