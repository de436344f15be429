#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ldgas {

enum class ErrorCode {
  InvalidArgument,
  IllConfined,
  NoOneCut,
  NoConvergence,
  FlatSegment,
  NotAnalytic,
  PathMismatch,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying one of the library's failure categories. Callers that
/// truncate a sweep (duality curves, joint surfaces) switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ldgas
