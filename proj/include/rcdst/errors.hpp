#pragma once

#include <stdexcept>
#include <string>

namespace rcdst {

/// Malformed or inconsistent input data (corpus, schema, embedding file,
/// checkpoint, prediction file).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor dimensions that do not agree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace rcdst
