#ifndef PKINN_ERRORS_HPP
#define PKINN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pkinn {

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidGridError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Design matrix is rank deficient and ridge regularization is disabled.
struct IllConditionedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss; `epoch` is where it happened.
struct DivergedError : std::runtime_error {
  int epoch;
  explicit DivergedError(int epoch_index)
      : std::runtime_error("training diverged at epoch " +
                           std::to_string(epoch_index)),
        epoch(epoch_index) {}
};

struct ParseError : std::runtime_error {
  std::string path;
  int line;
  ParseError(std::string file, int lineno, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(lineno) + ": " + what),
        path(std::move(file)),
        line(lineno) {}
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pkinn

#endif  // PKINN_ERRORS_HPP
