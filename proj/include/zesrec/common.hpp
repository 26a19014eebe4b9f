#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace zesrec {

// Row-major so that per-item and per-timestep rows are contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Position of an item inside a catalog (row index of its embedding).
using ItemIndex = std::uint32_t;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Derives an independent 64-bit seed for a named random sub-stream.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);

/// Writes through a sibling temporary file and renames it over `path`.
void atomic_write(const std::string& path, const std::function<void(std::ostream&)>& writer,
                  bool binary = false);

}  // namespace zesrec
