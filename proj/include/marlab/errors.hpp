#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace marlab {

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// A non-finite value appeared while evaluating the loss.
class NumericOverflow : public Error {
 public:
  NumericOverflow(const std::string& msg, std::int64_t example_index)
      : Error(msg), example_index_(example_index) {}
  std::int64_t example_index() const { return example_index_; }

 private:
  std::int64_t example_index_;
};

/// A documented precondition does not hold for the given inputs.
class PreconditionViolation : public Error {
 public:
  using Error::Error;
};

/// The network does not classify every training example correctly.
class NotInterpolated : public Error {
 public:
  NotInterpolated(const std::string& msg, std::vector<std::int64_t> offending)
      : Error(msg), offending_(std::move(offending)) {}
  const std::vector<std::int64_t>& offending_indices() const { return offending_; }

 private:
  std::vector<std::int64_t> offending_;
};

/// The signed sum of margin-set points is numerically zero.
class DegenerateDirection : public Error {
 public:
  using Error::Error;
};

/// The margin set violates the size hypothesis m(p+1)/(d+1) <= 1/3.
class HypothesisViolated : public Error {
 public:
  HypothesisViolated(const std::string& msg, std::int64_t m, double p, int d)
      : Error(msg), m_(m), p_(p), d_(d) {}
  std::int64_t m() const { return m_; }
  double p() const { return p_; }
  int d() const { return d_; }

 private:
  std::int64_t m_;
  double p_;
  int d_;
};

/// An iterative numerical routine failed to converge.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& msg, int iterations)
      : Error(msg), iterations_(iterations) {}
  int iterations() const { return iterations_; }

 private:
  int iterations_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace marlab
