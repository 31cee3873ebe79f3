#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace imrnn {

/// Root of every exception thrown by the library. The CLI maps these to exit
/// status 1 (user/input error); anything else escaping is treated as internal.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
  public:
    DimensionError(const std::string& what, std::size_t expected, std::size_t actual)
        : Error(what + ": expected dimension " + std::to_string(expected) + ", got " +
                std::to_string(actual)),
          expected_(expected),
          actual_(actual) {}

    std::size_t expected() const noexcept { return expected_; }
    std::size_t actual() const noexcept { return actual_; }

  private:
    std::size_t expected_;
    std::size_t actual_;
};

class ZeroNormError : public Error {
  public:
    using Error::Error;
};

class NonFiniteError : public Error {
  public:
    using Error::Error;
};

class SingularMatrixError : public Error {
  public:
    explicit SingularMatrixError(std::size_t pivot)
        : Error("matrix is singular: pivot " + std::to_string(pivot) +
                " below threshold"),
          pivot_(pivot) {}

    std::size_t pivot() const noexcept { return pivot_; }

  private:
    std::size_t pivot_;
};

class ParseError : public Error {
  public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

class NotFoundError : public Error {
  public:
    using Error::Error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

/// Invariant violated inside the library; the CLI exits with status 2.
class InternalError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

}  // namespace imrnn
