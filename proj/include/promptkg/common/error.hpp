#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace promptkg {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition (empty input, id out of range...).
class ContractViolation : public Error {
public:
    using Error::Error;
};

// Input text could not be parsed. `line` is 1-based, 0 when not applicable.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// A requested size cannot be satisfied (k > n, prompt over the token cap...).
class SizeError : public Error {
public:
    using Error::Error;
};

}  // namespace promptkg
