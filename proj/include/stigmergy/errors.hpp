#pragma once

#include <stdexcept>
#include <string>

namespace stigmergy {

// Bad or inconsistent run configuration (maps to CLI exit code 1).
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure during a run: instability, non-finite values (exit code 2).
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// The kernel pipeline produced a degenerate table (zero response at d = 0).
class kernel_error : public numeric_error {
public:
    explicit kernel_error(const std::string& msg) : numeric_error(msg) {}
};

// Not enough eligible agents left to fill a batch.
class exhaustion_error : public std::runtime_error {
public:
    explicit exhaustion_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace stigmergy
