#pragma once

#include <stdexcept>
#include <string>

namespace defersim {

// Thrown when a weight vector cannot be normalized (all zero / negative mass).
struct DegenerateWeightsError : std::runtime_error {
    explicit DegenerateWeightsError(const std::string& what) : std::runtime_error(what) {}
};

// Dimension mismatch between tensors, panels or prediction vectors.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid or inconsistent configuration values.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file; carries the 1-based line number when known.
struct ParseError : std::runtime_error {
    ParseError(const std::string& what, long line_no = 0)
        : std::runtime_error(line_no > 0 ? what + " (line " + std::to_string(line_no) + ")" : what),
          line(line_no) {}
    long line;
};

// Non-finite values encountered during numeric updates.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem failures (unreadable input, unwritable output directory).
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace defersim
