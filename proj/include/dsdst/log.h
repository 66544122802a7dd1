#ifndef DSDST_LOG_H_
#define DSDST_LOG_H_

#include <spdlog/logger.h>

#include <memory>

namespace dsdst {

// Shared stderr logger. Level comes from the DUAL_DST_LOG environment
// variable (trace, debug, info, warn, error, off); default is warn.
std::shared_ptr<spdlog::logger> logger();

}  // namespace dsdst

#endif  // DSDST_LOG_H_
