#include "psc/dtmc.hpp"

#include "psc/printer.hpp"
#include "psc/typeops.hpp"

#include <map>
#include <sstream>
#include <stdexcept>

namespace psc {

namespace {

// One-step successors with probabilities, per the transition relation of
// session types. End states self-loop with probability 1.
std::vector<std::pair<TypePtr, Rational>> successors(const TypePtr& state, const TypeTable& table) {
    switch (state->kind) {
    case TypeKind::EndFail:
    case TypeKind::EndSucc:
        return {{state, Rational(1)}};
    case TypeKind::In:
    case TypeKind::Out:
        return {{unfold(state->cont, table), Rational(1)}};
    case TypeKind::Branch:
    case TypeKind::Choice:
        return {{unfold(state->left, table), state->prob.value()},
                {unfold(state->right, table), state->prob.complement().value()}};
    case TypeKind::Ref:
        break;
    }
    throw std::logic_error("unresolved reference in DTMC state");
}

} // namespace

Dtmc state_space(const TypePtr& t, const TypeTable& table) {
    Dtmc chain;
    std::map<std::string, int> index_of;
    std::vector<int> worklist;

    auto intern = [&](const TypePtr& resolved) {
        std::string key = render_type(resolved);
        auto it = index_of.find(key);
        if (it != index_of.end()) return it->second;
        int idx = static_cast<int>(chain.states.size());
        index_of.emplace(std::move(key), idx);
        chain.states.push_back(resolved);
        chain.state_keys.push_back(render_type(resolved));
        if (resolved->kind == TypeKind::EndSucc) chain.succ_index = idx;
        if (resolved->kind == TypeKind::EndFail) chain.fail_index = idx;
        worklist.push_back(idx);
        return idx;
    };

    intern(unfold(t, table));
    for (std::size_t w = 0; w < worklist.size(); ++w) {
        int from = worklist[w];
        std::map<int, Rational> merged;
        for (auto& [succ, p] : successors(chain.states[static_cast<std::size_t>(from)], table))
            merged[intern(succ)] += p;
        for (auto& [to, p] : merged) chain.transitions.emplace_back(from, to, p);
    }
    return chain;
}

std::string WfError::str() const {
    switch (reason) {
    case Reason::Contractivity:
        return "contractivity failure at " + state;
    case Reason::Reachability:
        return "reachability failure: no terminated leaf reachable from " + state;
    }
    return "";
}

std::optional<WfError> check_wellformed(const TypePtr& t, const TypeTable& table) {
    // Contractivity of reference chains (normally guaranteed at table build).
    {
        std::set<std::string> seen;
        TypePtr cur = t;
        while (cur->kind == TypeKind::Ref) {
            if (!seen.insert(cur->name).second)
                return WfError{WfError::Reason::Contractivity, cur->name};
            if (!table.contains(cur->name))
                return WfError{WfError::Reason::Contractivity, cur->name};
            cur = table.body(cur->name);
        }
    }
    Dtmc chain = state_space(t, table);
    const std::size_t n = chain.states.size();
    // Backward closure from the terminated leaves over positive-probability
    // transitions.
    std::vector<bool> reaches(n, false);
    if (chain.succ_index) reaches[static_cast<std::size_t>(*chain.succ_index)] = true;
    if (chain.fail_index) reaches[static_cast<std::size_t>(*chain.fail_index)] = true;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& [from, to, p] : chain.transitions) {
            if (p.is_zero() || reaches[static_cast<std::size_t>(from)]) continue;
            if (reaches[static_cast<std::size_t>(to)]) {
                reaches[static_cast<std::size_t>(from)] = true;
                changed = true;
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!reaches[i]) return WfError{WfError::Reason::Reachability, chain.state_keys[i]};
    return std::nullopt;
}

Rational success_prob(const TypePtr& t, const TypeTable& table) {
    Dtmc chain = state_space(t, table);
    const std::size_t n = chain.states.size();
    num::LinearSystem system;
    for (std::size_t i = 0; i < n; ++i) system.add_variable("s" + std::to_string(i));
    for (std::size_t i = 0; i < n; ++i) {
        num::Equation eq{std::vector<Rational>(n), Rational(0)};
        if (chain.succ_index && static_cast<int>(i) == *chain.succ_index) {
            eq.coeffs[i] = Rational(1);
            eq.rhs = Rational(1);
        } else if (chain.fail_index && static_cast<int>(i) == *chain.fail_index) {
            eq.coeffs[i] = Rational(1);
            eq.rhs = Rational(0);
        } else {
            eq.coeffs[i] = Rational(1);
            for (const auto& [from, to, p] : chain.transitions)
                if (from == static_cast<int>(i)) eq.coeffs[static_cast<std::size_t>(to)] -= p;
        }
        system.add_equation(std::move(eq));
    }
    auto solution = num::solve_unique(system);
    if (!solution)
        throw std::logic_error("success probability system has no unique solution (type not well-formed?)");
    return solution->at("s0");
}

CanonicalForm canonical_form(const Dtmc& chain) {
    CanonicalForm cf{{}, {}, num::Matrix(0, 0), num::Matrix(0, 0)};
    if (chain.succ_index) cf.absorbing.push_back(*chain.succ_index);
    if (chain.fail_index) cf.absorbing.push_back(*chain.fail_index);
    for (std::size_t i = 0; i < chain.states.size(); ++i) {
        int idx = static_cast<int>(i);
        if ((chain.succ_index && idx == *chain.succ_index) ||
            (chain.fail_index && idx == *chain.fail_index))
            continue;
        cf.transient.push_back(idx);
    }
    std::map<int, std::size_t> tpos, apos;
    for (std::size_t i = 0; i < cf.transient.size(); ++i) tpos[cf.transient[i]] = i;
    for (std::size_t i = 0; i < cf.absorbing.size(); ++i) apos[cf.absorbing[i]] = i;
    cf.q = num::Matrix(cf.transient.size(), cf.transient.size());
    cf.r = num::Matrix(cf.transient.size(), cf.absorbing.size());
    for (const auto& [from, to, p] : chain.transitions) {
        auto f = tpos.find(from);
        if (f == tpos.end()) continue;
        auto tt = tpos.find(to);
        if (tt != tpos.end())
            cf.q.at(f->second, tt->second) += p;
        else
            cf.r.at(f->second, apos.at(to)) += p;
    }
    return cf;
}

num::Matrix absorption_matrix(const Dtmc& chain) {
    CanonicalForm cf = canonical_form(chain);
    const std::size_t t = cf.transient.size();
    num::Matrix i_minus_q = num::Matrix::identity(t);
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j < t; ++j)
            i_minus_q.at(i, j) -= cf.q.at(i, j);
    auto inv = num::invert(i_minus_q);
    if (!inv) throw std::logic_error("I - Q singular (type not well-formed?)");
    return *inv * cf.r;
}

Rational success_prob_matrix(const TypePtr& t, const TypeTable& table) {
    Dtmc chain = state_space(t, table);
    if (chain.succ_index && *chain.succ_index == 0) return Rational(1);
    if (chain.fail_index && *chain.fail_index == 0) return Rational(0);
    if (!chain.succ_index) return Rational(0); // success leaf unreachable
    CanonicalForm cf = canonical_form(chain);
    num::Matrix b = absorption_matrix(chain);
    std::size_t root_row = 0;
    for (std::size_t i = 0; i < cf.transient.size(); ++i)
        if (cf.transient[i] == 0) root_row = i;
    return b.at(root_row, 0); // column 0 is the success state
}

std::string edge_list(const Dtmc& chain) {
    std::ostringstream os;
    for (const auto& [from, to, p] : chain.transitions)
        os << from << ' ' << to << ' ' << p.num().get_str() << '/' << p.den().get_str() << '\n';
    return os.str();
}

} // namespace psc
