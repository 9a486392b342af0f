#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tcause {

enum class ErrorCode {
  InvalidParams,
  InvalidInput,
  NoOverlap,
  TooShort,
  EmptyCorpus,
  SingularDesign,
  NotAligned,
  InvalidRank,
  UnknownTarget,
  EmptyGraph,
  UnknownNode,
  IoError,
  CorruptFile,
  TargetNotInGraph,
  NoPathFound,
  UnknownRelation,
  DivergedLoss,
  NoChainFound,
  InsufficientHistory,
  LengthMismatch,
  SeriesTooShort,
  ConfigInvalid,
};

std::string_view error_name(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so the
// CLI can map it to a distinct exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace tcause
