#pragma once

#include <stdexcept>
#include <string>

namespace lindiff {

// Invalid inputs (dimension mismatches, out-of-range parameters, rank defects).
class domain_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// CSV / config parsing; row and col are 1-based, col == 0 means whole-line.
class parse_error : public std::runtime_error {
public:
    parse_error(const std::string& what, long row, long col)
        : std::runtime_error(what), row(row), col(col) {}
    long row;
    long col;
};

// Fixed-point or susceptibility failures in the replica solver.
class solver_error : public std::runtime_error {
public:
    explicit solver_error(const std::string& what, double residual = 0.0)
        : std::runtime_error(what), residual(residual) {}
    double residual;
};

class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace lindiff
