#pragma once

#include <stdexcept>
#include <string>

namespace xqm {

/// Broad failure classes. Each maps onto one CLI exit code.
enum class ErrorKind {
  Usage,        // bad flags, bad config, domain violations in arguments
  Integrity,    // malformed or inconsistent input data
  Scorer,       // external scorer process or protocol failures
  Capacity,     // pool too shallow for the requested sampling
};

int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

#define XQM_DEFINE_ERROR(Name, Kind)                                  \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& what) : Error(Kind, what) {}     \
  };

XQM_DEFINE_ERROR(UsageError, ErrorKind::Usage)
XQM_DEFINE_ERROR(ConfigError, ErrorKind::Usage)
XQM_DEFINE_ERROR(DomainError, ErrorKind::Usage)
XQM_DEFINE_ERROR(TemplateError, ErrorKind::Usage)
XQM_DEFINE_ERROR(CalibrationError, ErrorKind::Usage)
XQM_DEFINE_ERROR(DependencyError, ErrorKind::Usage)
XQM_DEFINE_ERROR(ParseError, ErrorKind::Integrity)
XQM_DEFINE_ERROR(FormatError, ErrorKind::Integrity)
XQM_DEFINE_ERROR(IntegrityError, ErrorKind::Integrity)
XQM_DEFINE_ERROR(AlignmentError, ErrorKind::Integrity)
XQM_DEFINE_ERROR(OverlapError, ErrorKind::Integrity)
XQM_DEFINE_ERROR(BoundsError, ErrorKind::Integrity)
XQM_DEFINE_ERROR(CoverageError, ErrorKind::Integrity)
XQM_DEFINE_ERROR(UndefinedCorrelationError, ErrorKind::Integrity)
XQM_DEFINE_ERROR(DegenerateCalibrationError, ErrorKind::Integrity)
XQM_DEFINE_ERROR(ScorerError, ErrorKind::Scorer)
XQM_DEFINE_ERROR(ProtocolError, ErrorKind::Scorer)
XQM_DEFINE_ERROR(TimeoutError, ErrorKind::Scorer)
XQM_DEFINE_ERROR(CapacityError, ErrorKind::Capacity)

#undef XQM_DEFINE_ERROR

}  // namespace xqm
