#pragma once

#include <stdexcept>
#include <string>

namespace wdose {

// Invalid argument to a model operation (negative dose, out-of-range age, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed or inconsistent configuration / data file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inputs that are individually valid but do not line up (e.g. reports over
// different cohorts).
class DataMismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wdose
