#pragma once

#include <stdexcept>
#include <string>

namespace optctl {

// All library errors derive from Error so callers can catch one base.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ZeroPolynomialError : public Error {
  public:
    explicit ZeroPolynomialError(const std::string& what = "zero polynomial has no roots")
        : Error(what) {}
};

class DegreeZeroError : public Error {
  public:
    explicit DegreeZeroError(const std::string& what = "constant polynomial has no roots")
        : Error(what) {}
};

class PoleHitError : public Error {
  public:
    explicit PoleHitError(const std::string& what = "evaluation point hits a pole")
        : Error(what) {}
};

class DegenerateLoopError : public Error {
  public:
    explicit DegenerateLoopError(const std::string& what = "feedback denominator vanishes")
        : Error(what) {}
};

// Carries the name of the offending field.
class InvalidConfigError : public Error {
  public:
    InvalidConfigError(std::string field, const std::string& why)
        : Error("invalid config field '" + field + "': " + why), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

  private:
    std::string field_;
};

class NonFiniteGradientError : public Error {
  public:
    explicit NonFiniteGradientError(const std::string& what = "gradient sample is not finite")
        : Error(what) {}
};

class UnsupportedKindError : public Error {
  public:
    explicit UnsupportedKindError(const std::string& what) : Error(what) {}
};

class NotAdamError : public Error {
  public:
    explicit NotAdamError(const std::string& what = "adaptive gain requires the adam optimizer")
        : Error(what) {}
};

class TopologyError : public Error {
  public:
    explicit TopologyError(const std::string& what) : Error(what) {}
};

class NonFiniteStateError : public Error {
  public:
    explicit NonFiniteStateError(const std::string& what = "plant state left the finite range")
        : Error(what) {}
};

class UnknownSignalError : public Error {
  public:
    explicit UnknownSignalError(const std::string& what) : Error(what) {}
};

class NoTransferFunctionError : public Error {
  public:
    explicit NoTransferFunctionError(const std::string& what) : Error(what) {}
};

class InsufficientDataError : public Error {
  public:
    explicit InsufficientDataError(const std::string& what) : Error(what) {}
};

}  // namespace optctl
