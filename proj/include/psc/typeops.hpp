#pragma once

#include "psc/ast.hpp"

#include <map>
#include <optional>
#include <string>

namespace psc {

/// A typing context: finite map from names to value types.
using Context = std::map<std::string, ValueType>;

/// Resolves references until a non-Ref constructor appears. Terminates by
/// contractivity of the table.
TypePtr unfold(const TypePtr& t, const TypeTable& table);

/// Equality of the possibly-infinite regular trees denoted by two types,
/// decided as a bisimulation with memoization of visited pairs. Probability
/// annotations must match exactly.
bool type_equal(const ValueType& a, const ValueType& b, const TypeTable& table);
bool session_equal(const TypePtr& a, const TypePtr& b, const TypeTable& table);

/// Structural dual; named references map to the table's generated dual
/// entries, so the result stays regular.
TypePtr dual(const TypePtr& t, const TypeTable& table);

/// un(t): only the failed-termination session type and base types may be
/// discarded.
bool is_unrestricted(const ValueType& t, const TypeTable& table);

/// safe(t): anything that is not an external branch.
bool is_safe(const ValueType& t, const TypeTable& table);

/// bal(ctx): every entry unrestricted or a completed session.
bool is_balanced(const Context& ctx, const TypeTable& table);

/// Probabilistic combination of two types weighed by p. Defined when the
/// types are equal, when both are internal choices over equal arms, or when
/// both are completed sessions; undefined otherwise (returned as nullopt).
std::optional<ValueType> combine(const Probability& p, const ValueType& a, const ValueType& b,
                                 const TypeTable& table);

/// Pointwise extension of combine; defined iff domains coincide and every
/// pointwise combination is defined.
std::optional<Context> combine_context(const Probability& p, const Context& a, const Context& b,
                                       const TypeTable& table);

} // namespace psc
