#pragma once

#include <stdexcept>
#include <string>

namespace deconv {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidParameterError : public Error {
public:
  using Error::Error;
};

// Input is structurally valid but carries no usable information
// (constant series, all-zero response, empty path).
class DegenerateInputError : public Error {
public:
  using Error::Error;
};

class SolverStallError : public Error {
public:
  using Error::Error;
};

class OracleFailureError : public Error {
public:
  using Error::Error;
};

class SelectionFailureError : public Error {
public:
  using Error::Error;
};

// The mixing-probability Gram matrix is (numerically) singular.
class SingularDesignError : public Error {
public:
  using Error::Error;
};

class DegenerateComponentError : public Error {
public:
  using Error::Error;
};

class FitFailureError : public Error {
public:
  using Error::Error;
};

class OutOfRangeError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace deconv
