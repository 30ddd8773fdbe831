#pragma once

#include <stdexcept>
#include <string>

namespace csfiqa {

// Thrown on incompatible tensor shapes.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown on invalid configuration (bad key, indivisible sizes, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown on unreadable / malformed data files.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown on non-finite values or undefined numeric results.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when a masked softmax slice has no surviving entries.
class InvalidMaskError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace csfiqa
