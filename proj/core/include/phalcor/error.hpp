#pragma once

#include <stdexcept>
#include <string>

namespace phalcor {

// Categories double as process exit codes for the command line tool.
enum class ErrorCategory : int {
  Config = 2,
  Geometry = 3,
  Infeasible = 4,
  InsufficientDecay = 5,
  Io = 6,
  Campaign = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::Config, what) {}
};

struct GeometryError : Error {
  explicit GeometryError(const std::string& what) : Error(ErrorCategory::Geometry, what) {}
};

struct InfeasibleTargetError : Error {
  explicit InfeasibleTargetError(const std::string& what)
      : Error(ErrorCategory::Infeasible, what) {}
};

struct InsufficientDecayError : Error {
  explicit InsufficientDecayError(const std::string& what)
      : Error(ErrorCategory::InsufficientDecay, what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorCategory::Io, what) {}
};

struct CampaignError : Error {
  explicit CampaignError(const std::string& what) : Error(ErrorCategory::Campaign, what) {}
};

}  // namespace phalcor
