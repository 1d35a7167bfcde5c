#pragma once

/**
 * @file error.hpp
 * @brief Exception hierarchy shared by every polypol module.
 *
 * All errors derive from polypol::Error so callers (the CLI in particular)
 * can map "anything that went wrong" to a single exit status while tests
 * can still match on the precise type.
 */

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace polypol {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An instantiation does not assign a parameter that the expression uses.
class MissingParameter : public Error {
public:
    explicit MissingParameter(std::size_t id)
        : Error("missing value for parameter #" + std::to_string(id)), id_(id) {}

    std::size_t id() const noexcept { return id_; }

private:
    std::size_t id_;
};

/// (I - A) has no inverse; for MDPs this means some policy never reaches the absorbing state.
class SingularSystem : public Error {
public:
    using Error::Error;
};

/// A constraint became constant-false during partial instantiation.
class Contradiction : public Error {
public:
    using Error::Error;
};

/// Text that does not follow one of the accepted grammars.
class SyntaxError : public Error {
public:
    SyntaxError(std::string message, std::size_t line, std::size_t column)
        : Error(format(message, line, column)), line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    static std::string format(const std::string& message, std::size_t line, std::size_t column) {
        return "syntax error at " + std::to_string(line) + ":" + std::to_string(column) + ": " + message;
    }

    std::size_t line_;
    std::size_t column_;
};

/// A structurally invalid model. Carries every violation found, not only the first.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> violations)
        : Error(join(violations)), violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    static std::string join(const std::vector<std::string>& items) {
        std::string out = "invalid model";
        for (const auto& item : items) {
            out += "\n  - ";
            out += item;
        }
        return out;
    }

    std::vector<std::string> violations_;
};

class TooManyPolicies : public Error {
public:
    using Error::Error;
};

class TooLarge : public Error {
public:
    using Error::Error;
};

class NotStronglyConnected : public Error {
public:
    using Error::Error;
};

/// Policy iteration exceeded the number of distinct policies; indicates a bug, never bad input.
class NonConvergence : public Error {
public:
    using Error::Error;
};

/// The synthesized constraint is not satisfied by the reference instantiation.
class InternalOptimalityViolation : public Error {
public:
    using Error::Error;
};

}  // namespace polypol
