#pragma once

#include <stdexcept>
#include <string>

namespace roast {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments, shape mismatches, malformed configs or datasets.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A library operation produced (or was fed) NaN/Inf.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Training loss became non-finite.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace roast
