#ifndef ACUQUANT_ERROR_HPP
#define ACUQUANT_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace acuquant {

enum class ErrorKind {
  Config,
  Io,
  Span,
  DegenerateInput,
  LengthMismatch,
  WindowTooLong,
  MissingChannel,
  SingularInnovation,
  NoCyclesFound,
  InconsistentStates,
  EmptyInput,
  SeriesTooShort,
  FitUnstable,
  DegenerateGroup,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Span: return "SpanError";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::WindowTooLong: return "WindowTooLong";
    case ErrorKind::MissingChannel: return "MissingChannel";
    case ErrorKind::SingularInnovation: return "SingularInnovation";
    case ErrorKind::NoCyclesFound: return "NoCyclesFound";
    case ErrorKind::InconsistentStates: return "InconsistentStates";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::SeriesTooShort: return "SeriesTooShort";
    case ErrorKind::FitUnstable: return "FitUnstable";
    case ErrorKind::DegenerateGroup: return "DegenerateGroup";
  }
  return "Error";
}

/// Every failure raised by the toolkit. The message carries the module name,
/// e.g. "statefuse: MissingChannel: visual channel required".
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string_view module, const std::string& what)
      : std::runtime_error(std::string(module) + ": " + std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Process exit status for the command-line front-end.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::MissingChannel:
      return 2;
    case ErrorKind::Io:
      return 3;
    case ErrorKind::NoCyclesFound:
      return 4;
    case ErrorKind::DegenerateGroup:
      return 5;
    default:
      return 1;
  }
}

}  // namespace acuquant

#endif  // ACUQUANT_ERROR_HPP
