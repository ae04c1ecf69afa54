#ifndef WDNSE_ERROR_HPP
#define WDNSE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace wdnse {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Malformed `.inp` text or measurement file.
class ParseError : public Error
{
public:
  ParseError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line)
  {
  }
  int line() const noexcept { return line_; }

private:
  int line_;
};

/// Input uses a feature outside the supported model (valves, controls, ...).
class UnsupportedFeature : public Error
{
public:
  using Error::Error;
};

/// Structurally invalid network or measurement set.
class ValidationError : public Error
{
public:
  using Error::Error;
};

/// Argument outside the domain of a hydraulic relation.
class DomainError : public Error
{
public:
  using Error::Error;
};

/// Caller violated a dimension or shape contract.
class ContractError : public Error
{
public:
  using Error::Error;
};

/// The successive approximation loop could not continue.
class EstimationError : public Error
{
public:
  EstimationError(const std::string& what, int iteration)
      : Error("iteration " + std::to_string(iteration) + ": " + what), iteration_(iteration)
  {
  }
  int iteration() const noexcept { return iteration_; }

private:
  int iteration_;
};

/// A nonlinear oracle solve failed to converge.
class NoConvergence : public Error
{
public:
  using Error::Error;
};

}  // namespace wdnse

#endif  // WDNSE_ERROR_HPP
