#pragma once

#include <stdexcept>
#include <string>

namespace qslab {

// Caller supplied something outside an operation's domain.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Text input that does not parse; carries the byte offset of the failure.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t pos)
        : std::runtime_error(what + " at offset " + std::to_string(pos)), pos_(pos) {}
    std::size_t position() const noexcept { return pos_; }

private:
    std::size_t pos_;
};

// A search exceeded its configured state budget; not a verdict.
class BudgetExceeded : public std::runtime_error {
public:
    explicit BudgetExceeded(std::size_t budget)
        : std::runtime_error("state budget of " + std::to_string(budget) + " positions exceeded"),
          budget_(budget) {}
    std::size_t budget() const noexcept { return budget_; }

private:
    std::size_t budget_;
};

// A move rejected by the game rules.
class IllegalMove : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace qslab
