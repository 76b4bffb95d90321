#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace shb {

/// Validation errors map to exit code 2 in the CLI, numeric failures to 3.
enum class ErrorCategory { Validation, Numeric };

class Error : public std::runtime_error {
public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

private:
  ErrorCategory category_;
};

/// One violated invariant: the offending field and the constraint it broke.
struct Violation {
  std::string field;
  std::string constraint;
};

class InvalidParameter : public Error {
public:
  explicit InvalidParameter(std::vector<Violation> violations)
      : Error(ErrorCategory::Validation, describe(violations)),
        violations_(std::move(violations)) {}

  InvalidParameter(std::string field, std::string constraint)
      : InvalidParameter(std::vector<Violation>{{std::move(field), std::move(constraint)}}) {}

  const std::vector<Violation>& violations() const noexcept { return violations_; }

  bool names(const std::string& field) const {
    for (const auto& v : violations_)
      if (v.field == field) return true;
    return false;
  }

private:
  static std::string describe(const std::vector<Violation>& vs) {
    std::string msg = "invalid parameter";
    for (const auto& v : vs) msg += "\n  " + v.field + ": " + v.constraint;
    return msg;
  }

  std::vector<Violation> violations_;
};

#define SHB_DEFINE_ERROR(Name, Category)                                   \
  class Name : public Error {                                              \
  public:                                                                  \
    explicit Name(const std::string& what)                                 \
        : Error(ErrorCategory::Category, #Name ": " + what) {}             \
  };

SHB_DEFINE_ERROR(GridMismatch, Validation)
SHB_DEFINE_ERROR(GridUnresolvable, Validation)
SHB_DEFINE_ERROR(NyquistViolation, Validation)
SHB_DEFINE_ERROR(InvalidShape, Validation)
SHB_DEFINE_ERROR(InsufficientData, Validation)
SHB_DEFINE_ERROR(MismatchedSampling, Validation)
SHB_DEFINE_ERROR(ZeroHyperfineConstant, Validation)
SHB_DEFINE_ERROR(NonFiniteState, Numeric)
SHB_DEFINE_ERROR(NoFeatureFound, Numeric)
SHB_DEFINE_ERROR(DegenerateFit, Numeric)

#undef SHB_DEFINE_ERROR

} // namespace shb
