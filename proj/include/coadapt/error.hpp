#pragma once

#include <stdexcept>
#include <string>

namespace coadapt {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input text or file could not be interpreted.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A corpus ended up with no usable sentences.
class EmptyCorpusError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent configuration, e.g. a grammar lacking a weight for a relation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Operation needs more elements than were supplied.
class ArityError : public Error {
 public:
  using Error::Error;
};

/// Invalid model parameters (non-positive drift, non-PD covariance, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A quantity is undefined for the given input (zero denominator, degenerate axis).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure, e.g. a joint covariance that is not positive definite.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A downstream pipeline step ran before the step producing its inputs.
class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

}  // namespace coadapt
