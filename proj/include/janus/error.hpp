#pragma once

#include <stdexcept>
#include <string>

namespace janus {

/// Base of every error raised by the library. `kind()` is a stable short tag
/// used in CLI diagnostics and protocol error messages.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error("domain", w) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error("config", w) {}
};

struct SingularityError : Error {
  explicit SingularityError(const std::string& w) : Error("singularity", w) {}
};

struct GeometryError : Error {
  explicit GeometryError(const std::string& w) : Error("geometry", w) {}
};

struct ScheduleError : Error {
  explicit ScheduleError(const std::string& w) : Error("schedule", w) {}
};

/// Adaptive step size fell below the representable minimum.
struct StiffnessError : Error {
  StiffnessError(const std::string& w, double t) : Error("stiffness", w), time(t) {}
  double time;
};

struct InsufficientDataError : Error {
  explicit InsufficientDataError(const std::string& w) : Error("insufficient_data", w) {}
};

struct SegmentationError : Error {
  explicit SegmentationError(const std::string& w) : Error("segmentation", w) {}
};

struct DegenerateDirectionError : Error {
  explicit DegenerateDirectionError(const std::string& w) : Error("degenerate_direction", w) {}
};

struct AlignmentError : Error {
  explicit AlignmentError(const std::string& w) : Error("alignment", w) {}
};

/// Malformed input file or message. Carries a location hint (line or field).
struct ParseError : Error {
  explicit ParseError(const std::string& w) : Error("parse", w) {}
};

}  // namespace janus
