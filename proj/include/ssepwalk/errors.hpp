#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ssepwalk {

// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A model or lattice parameter violates its bounds. `field()` names it.
class OutOfRange : public Error {
public:
    OutOfRange(std::string field, const std::string& value)
        : Error("OutOfRange(" + field + "): offending value " + value), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class OutOfHorizon : public Error {
public:
    using Error::Error;
};

// Walk reached |X| >= L/2; the torus no longer stands in for Z.
class WindingOverflow : public Error {
public:
    using Error::Error;
};

class InsufficientWindow : public Error {
public:
    InsufficientWindow(int required, int available)
        : Error("InsufficientWindow: need radius " + std::to_string(required) + ", window has " +
                std::to_string(available)),
          required_(required), available_(available) {}
    int required() const noexcept { return required_; }
    int available() const noexcept { return available_; }

private:
    int required_;
    int available_;
};

class EnumerationBudgetExceeded : public Error {
public:
    using Error::Error;
};

class TooFewSamples : public Error {
public:
    TooFewSamples(std::size_t have, std::size_t need)
        : Error("TooFewSamples: have " + std::to_string(have) + ", need " + std::to_string(need)) {}
};

class DegenerateWeights : public Error {
public:
    DegenerateWeights() : Error("DegenerateWeights: all weights are zero") {}
};

class InvalidPlan : public Error {
public:
    using Error::Error;
};

// Event-log parse failure, carrying the 1-based line number.
class MalformedLog : public Error {
public:
    MalformedLog(std::size_t line, const std::string& what)
        : Error("malformed event log at line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace ssepwalk
