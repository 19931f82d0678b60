#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace paneliv {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (CSV contents, panel invariants).
class DataError : public Error {
 public:
  using Error::Error;
};

// An invalid RegressionSpec, filter, transform, or config entry.
class SpecError : public Error {
 public:
  using Error::Error;
};

// Numerical failure during estimation.
class EstimationError : public Error {
 public:
  using Error::Error;
};

// Design matrix lost full column rank. `columns` lists the collinear set.
class RankError : public EstimationError {
 public:
  RankError(const std::string& what, std::vector<std::string> columns)
      : EstimationError(what), columns_(std::move(columns)) {}
  const std::vector<std::string>& columns() const noexcept { return columns_; }

 private:
  std::vector<std::string> columns_;
};

}  // namespace paneliv
