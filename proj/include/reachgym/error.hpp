#pragma once

#include <stdexcept>
#include <string>

namespace reachgym {

/// A caller broke a documented precondition (wrong dimension, bad argument
/// range, stepping a finished episode, ...).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// An environment, model or trainer configuration failed validation.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A text file could not be parsed. `line()` is 1-based, 0 when unknown.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Checkpoint or model file could not be read or does not match the requested shape.
class LoadError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failure during optimization (NaN loss, non-finite gradient).
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const char* msg) {
    if (!cond) throw ContractViolation(msg);
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ContractViolation(msg);
}

}  // namespace detail
}  // namespace reachgym
