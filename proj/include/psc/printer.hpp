#pragma once

#include "psc/ast.hpp"

#include <string>

namespace psc {

/// Concrete-syntax rendering. parse_program(render(p)) is structurally
/// equal to p for every valid program.
std::string render_type(const TypePtr& t);
std::string render_value_type(const ValueType& t);
std::string render_process(const ProcPtr& p);
std::string render_program(const Program& prog);

} // namespace psc
