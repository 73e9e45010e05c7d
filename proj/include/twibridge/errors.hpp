#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace twibridge {

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind {
  Config = 2,
  Io = 3,
  Protocol = 4,
  Divergence = 5,
  Shape = 6,
  Degenerate = 7,
  Parse = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::Config, w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorKind::Io, w) {}
};
struct ProtocolError : Error {
  explicit ProtocolError(const std::string& w) : Error(ErrorKind::Protocol, w) {}
};
struct ShapeError : Error {
  explicit ShapeError(const std::string& w) : Error(ErrorKind::Shape, w) {}
};
// Raised when a sample carries no supervised pixel; trainers skip it.
struct DegenerateInputError : Error {
  explicit DegenerateInputError(const std::string& w) : Error(ErrorKind::Degenerate, w) {}
};

struct DivergenceError : Error {
  DivergenceError(std::size_t sample_index, const std::string& w)
      : Error(ErrorKind::Divergence, w), sample_index(sample_index) {}
  std::size_t sample_index;
};

struct ParseError : Error {
  ParseError(std::size_t line, const std::string& w)
      : Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + w), line(line) {}
  std::size_t line;
};

}  // namespace twibridge
