#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace decopt {

struct config_error : std::runtime_error {
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

struct io_error : std::runtime_error {
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

// Text-format errors always carry the offending 1-based line number.
struct parse_error : std::runtime_error {
  parse_error(std::size_t line_number, const std::string& what)
      : std::runtime_error("line " + std::to_string(line_number) + ": " + what),
        line(line_number) {}
  std::size_t line;
};

// Raised when an iterate block leaves the finite range; carries the round
// at which the blow-up was detected.
struct divergence_error : std::runtime_error {
  divergence_error(long at_round, const std::string& what)
      : std::runtime_error(what + " (round " + std::to_string(at_round) + ")"),
        round(at_round) {}
  long round;
};

struct degenerate_step_error : std::runtime_error {
  explicit degenerate_step_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace decopt
