#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace nvmux {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// An inversion has no solution for the requested anchor.
class UnsolvableError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed user input (files, configs). Carries a 1-based line number when known.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Iterative fit stopped without meeting its convergence test.
// best_parameters holds the lowest-cost parameter vector reached.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, std::vector<double> best)
        : std::runtime_error(what), best_parameters(std::move(best)) {}
    std::vector<double> best_parameters;
};

}  // namespace nvmux
