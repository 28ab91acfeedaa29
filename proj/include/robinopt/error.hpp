#pragma once

#include <stdexcept>
#include <string>

namespace robinopt {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad parameters, unparsable files, schema violations.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed (non-convergence, indefinite operator, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A hypothesis of the model is violated (e.g. empty Dirichlet set, V0 out of range).
class HypothesisError : public Error {
 public:
  using Error::Error;
};

}  // namespace robinopt
