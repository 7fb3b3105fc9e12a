#pragma once

#include "psc/ast.hpp"

#include <stdexcept>
#include <string>

namespace psc {

struct ParseError : std::runtime_error {
    ParseError(int line, int col, const std::string& message)
        : std::runtime_error(std::to_string(line) + ":" + std::to_string(col) + ": " + message),
          line(line), col(col) {}
    explicit ParseError(const std::string& message) : std::runtime_error(message), line(0), col(0) {}
    int line, col;
};

/// Parses a complete program (type definitions, process definitions and an
/// optional main process). Throws ParseError on malformed input, unknown
/// type/process names, arity mismatches, shadowed binders and probability
/// literals outside [0, 1].
Program parse_program(const std::string& text);

/// Parses a single session type against an existing table (for tests/tools).
TypePtr parse_type(const std::string& text);

} // namespace psc
