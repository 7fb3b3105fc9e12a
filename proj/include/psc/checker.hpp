#pragma once

#include "psc/ast.hpp"
#include "psc/linear.hpp"
#include "psc/typeops.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace psc {

/// Context entry for the algorithmic checker: a value type whose top-level
/// internal-choice or completed-session probability annotation may be
/// replaced by a constraint variable. Branch annotations and process-level
/// choice annotations are always concrete.
struct SymType {
    ValueType base;
    std::optional<int> annot_var; // overrides the top-level probability when set

    static SymType concrete(ValueType v) { return SymType{std::move(v), std::nullopt}; }
};

using SymContext = std::map<std::string, SymType>;

/// Linear equality sum(coeff_i * var_i) = constant; every variable ranges
/// over [0, 1].
struct Constraint {
    std::vector<std::pair<Rational, int>> terms;
    Rational constant;
};

class ConstraintSystem {
public:
    int fresh(const std::string& hint);
    void add(Constraint c) { constraints_.push_back(std::move(c)); }
    void add_pin(int var, Rational value); // var = value

    int variable_count() const { return static_cast<int>(names_.size()); }
    const std::vector<Constraint>& constraints() const { return constraints_; }
    const std::string& name_of(int var) const { return names_[static_cast<std::size_t>(var)]; }

    /// Builds the bounded linear system and runs the feasibility solver.
    std::optional<num::Assignment> solve() const;
    num::LinearSystem to_linear_system() const;

private:
    std::vector<std::string> names_;
    std::vector<Constraint> constraints_;
};

/// Rule violation detected before constraint solving.
struct TypingError {
    std::string rule;    // violated typing rule, e.g. "t-out"
    std::string subterm; // rendering of the offending subterm
    std::string message;
};

struct DefVerdict {
    std::string name;
    bool accepted = false;
    int constraint_count = 0;
    bool infeasible = false;               // constraint system unsatisfiable
    std::optional<TypingError> local_error; // rule violation
};

struct CheckReport {
    std::vector<std::pair<std::string, std::string>> type_errors; // (type, reason)
    std::vector<DefVerdict> defs;
    bool has_main = false;
    DefVerdict main_verdict;
    // Synthesized context of main: one #p entry per measured session.
    std::vector<std::pair<std::string, Rational>> main_context;

    bool accepted() const;
    std::optional<Rational> session_probability(const std::string& name) const;
};

/// Checks every definition body against its declared parameter context, then
/// main with a synthesized completed-session context.
CheckReport check_program(const Program& prog);

/// One typing rule per process form; accumulates linear constraints into acc.
/// Throws TypingError on local rule violations.
void check_process(const Program& prog, SymContext ctx, const ProcPtr& p, ConstraintSystem& acc);

/// Delegates to the exact feasibility solver; nullopt means infeasible.
std::optional<num::Assignment> solve_and_report(const ConstraintSystem& acc);

} // namespace psc
