#pragma once

#include "psc/ast.hpp"
#include "psc/linear.hpp"

#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace psc {

/// The absorbing discrete-time Markov chain of a session type. States are
/// syntactic subterms after reference resolution, deduplicated by structural
/// identity; parallel edges to the same successor are merged by probability
/// summation, so outgoing probabilities from every state sum to exactly 1.
struct Dtmc {
    std::vector<TypePtr> states;        // resolved heads; index 0 is the root type
    std::vector<std::string> state_keys; // canonical renderings
    std::vector<std::tuple<int, int, Rational>> transitions;
    std::optional<int> succ_index; // state of "done" when present
    std::optional<int> fail_index; // state of "end" when present
};

Dtmc state_space(const TypePtr& t, const TypeTable& table);

struct WfError {
    enum class Reason { Contractivity, Reachability };
    Reason reason;
    std::string state; // rendering of the offending state
    std::string str() const;
};

/// Verifies contractivity and that every state reaches a terminated leaf
/// through transitions of positive probability. nullopt means well-formed.
std::optional<WfError> check_wellformed(const TypePtr& t, const TypeTable& table);

/// Success probability by the equation-system method of the success
/// probability definition: one variable per state, solved exactly.
Rational success_prob(const TypePtr& t, const TypeTable& table);

/// Independent oracle: canonical-form decomposition and B = (I-Q)^{-1} R.
Rational success_prob_matrix(const TypePtr& t, const TypeTable& table);

/// Canonical form of the chain: absorbing states first (success, then
/// failure), transients after, in discovery order.
struct CanonicalForm {
    std::vector<int> absorbing; // dtmc state indices
    std::vector<int> transient;
    num::Matrix q; // transient -> transient
    num::Matrix r; // transient -> absorbing
};

CanonicalForm canonical_form(const Dtmc& chain);

/// B = (I-Q)^{-1} R; rows follow CanonicalForm::transient, columns
/// CanonicalForm::absorbing.
num::Matrix absorption_matrix(const Dtmc& chain);

/// One line per transition: `from_index to_index p_num/p_den`.
std::string edge_list(const Dtmc& chain);

} // namespace psc
