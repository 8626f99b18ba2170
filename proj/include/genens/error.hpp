#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace genens {

// Base class for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed CSV input. Row is 1-based over data lines (header excluded).
class ParseError : public Error {
 public:
  ParseError(std::size_t row, std::string column, const std::string& what)
      : Error("row " + std::to_string(row) + ", column " + column + ": " + what),
        row_(row),
        column_(std::move(column)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

// An input lies outside the domain an operation is defined on.
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace genens
