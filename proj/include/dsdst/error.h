#ifndef DSDST_ERROR_H_
#define DSDST_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace dsdst {

// Error categories surfaced by the library. The CLI maps each to an exit code.
enum class ErrorKind {
  kParse = 1,
  kSchema,
  kRange,
  kConfig,
  kProjection,
  kShape,
  kDecode,
  kAlignment,
  kCompatibility,
  kUsage,
  kTraining,
  kIo,
};

std::string_view error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace dsdst

#endif  // DSDST_ERROR_H_
