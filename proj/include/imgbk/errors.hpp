#pragma once

#include <stdexcept>
#include <string>

namespace imgbk {

// Malformed, missing, or inconsistent dataset content.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values or diverging optimization.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace imgbk
