#include "psc/typeops.hpp"

#include <set>
#include <stdexcept>
#include <utility>

namespace psc {

TypePtr unfold(const TypePtr& t, const TypeTable& table) {
    TypePtr cur = t;
    std::set<std::string> seen;
    while (cur->kind == TypeKind::Ref) {
        if (!seen.insert(cur->name).second)
            throw std::logic_error("non-contractive reference chain at " + cur->name);
        cur = table.body(cur->name);
    }
    return cur;
}

namespace {

using PairSet = std::set<std::pair<const SessionType*, const SessionType*>>;

bool value_equal_rec(const ValueType& a, const ValueType& b, const TypeTable& table, PairSet& seen);

bool session_equal_rec(const TypePtr& a, const TypePtr& b, const TypeTable& table, PairSet& seen) {
    TypePtr ua = unfold(a, table);
    TypePtr ub = unfold(b, table);
    if (ua == ub) return true;
    auto key = std::make_pair(ua.get(), ub.get());
    if (!seen.insert(key).second) return true; // coinduction: assume equal
    if (ua->kind != ub->kind) return false;
    switch (ua->kind) {
    case TypeKind::EndFail:
    case TypeKind::EndSucc:
        return true;
    case TypeKind::In:
    case TypeKind::Out:
        return value_equal_rec(ua->payload, ub->payload, table, seen) &&
               session_equal_rec(ua->cont, ub->cont, table, seen);
    case TypeKind::Branch:
    case TypeKind::Choice:
        return ua->prob == ub->prob && session_equal_rec(ua->left, ub->left, table, seen) &&
               session_equal_rec(ua->right, ub->right, table, seen);
    case TypeKind::Ref:
        break;
    }
    throw std::logic_error("unreachable");
}

bool value_equal_rec(const ValueType& a, const ValueType& b, const TypeTable& table, PairSet& seen) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
    case ValueType::Kind::Session:
        return session_equal_rec(a.session, b.session, table, seen);
    case ValueType::Kind::Completed:
        return a.completed == b.completed;
    case ValueType::Kind::Base:
        return a.base == b.base;
    }
    return false;
}

} // namespace

bool session_equal(const TypePtr& a, const TypePtr& b, const TypeTable& table) {
    PairSet seen;
    return session_equal_rec(a, b, table, seen);
}

bool type_equal(const ValueType& a, const ValueType& b, const TypeTable& table) {
    PairSet seen;
    return value_equal_rec(a, b, table, seen);
}

TypePtr dual(const TypePtr& t, const TypeTable& table) {
    switch (t->kind) {
    case TypeKind::EndFail:
    case TypeKind::EndSucc:
        return t;
    case TypeKind::In:
        return make_out(t->payload, dual(t->cont, table));
    case TypeKind::Out:
        return make_in(t->payload, dual(t->cont, table));
    case TypeKind::Branch:
        return make_choice(t->prob, dual(t->left, table), dual(t->right, table));
    case TypeKind::Choice:
        return make_branch(t->prob, dual(t->left, table), dual(t->right, table));
    case TypeKind::Ref:
        return make_ref(table.dual_name(t->name));
    }
    throw std::logic_error("unreachable");
}

bool is_unrestricted(const ValueType& t, const TypeTable& table) {
    switch (t.kind) {
    case ValueType::Kind::Session:
        return unfold(t.session, table)->kind == TypeKind::EndFail;
    case ValueType::Kind::Completed:
        return false;
    case ValueType::Kind::Base:
        return true;
    }
    return false;
}

bool is_safe(const ValueType& t, const TypeTable& table) {
    if (!t.is_session()) return true;
    return unfold(t.session, table)->kind != TypeKind::Branch;
}

bool is_balanced(const Context& ctx, const TypeTable& table) {
    for (const auto& [name, t] : ctx)
        if (!t.is_completed() && !is_unrestricted(t, table)) return false;
    return true;
}

std::optional<ValueType> combine(const Probability& p, const ValueType& a, const ValueType& b,
                                 const TypeTable& table) {
    if (type_equal(a, b, table)) return a;
    if (a.is_completed() && b.is_completed()) {
        Rational mixed = p.value() * a.completed.value() +
                         p.complement().value() * b.completed.value();
        return ValueType::make_completed(Probability(mixed));
    }
    if (a.is_session() && b.is_session()) {
        TypePtr ua = unfold(a.session, table);
        TypePtr ub = unfold(b.session, table);
        if (ua->kind == TypeKind::Choice && ub->kind == TypeKind::Choice &&
            session_equal(ua->left, ub->left, table) && session_equal(ua->right, ub->right, table)) {
            Rational mixed = p.value() * ua->prob.value() + p.complement().value() * ub->prob.value();
            return ValueType::make_session(make_choice(Probability(mixed), ua->left, ua->right));
        }
    }
    return std::nullopt;
}

std::optional<Context> combine_context(const Probability& p, const Context& a, const Context& b,
                                       const TypeTable& table) {
    if (a.size() != b.size()) return std::nullopt;
    Context out;
    for (const auto& [name, ta] : a) {
        auto it = b.find(name);
        if (it == b.end()) return std::nullopt;
        auto c = combine(p, ta, it->second, table);
        if (!c) return std::nullopt;
        out.emplace(name, std::move(*c));
    }
    return out;
}

} // namespace psc
