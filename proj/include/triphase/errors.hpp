#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace triphase {

enum class ErrorCode {
    NotInRange,
    KclViolation,
    KvlViolation,
    NonFinite,
    SingularImpedance,
    WrongKind,
    DuplicateBus,
    UnknownBus,
    InvalidLine,
    DisconnectedGraph,
    NoVoltageSource,
    SingularSystem,
    SingularReducedSystem,
    MissingZeroSequence,
    ShapeMismatch,
    ParseError,
    ValidationError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (notably the CLI) can map it to an exit status without string matching.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }
    /// The message without the code prefix.
    const std::string& detail() const noexcept { return detail_; }

  private:
    ErrorCode code_;
    std::string detail_;
};

}  // namespace triphase
