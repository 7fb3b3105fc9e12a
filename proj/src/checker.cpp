#include "psc/checker.hpp"

#include "psc/dtmc.hpp"
#include "psc/printer.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace psc {

int ConstraintSystem::fresh(const std::string& hint) {
    names_.push_back(hint + "#" + std::to_string(names_.size()));
    return static_cast<int>(names_.size()) - 1;
}

void ConstraintSystem::add_pin(int var, Rational value) {
    add(Constraint{{{Rational(1), var}}, std::move(value)});
}

num::LinearSystem ConstraintSystem::to_linear_system() const {
    num::LinearSystem sys;
    sys.bounds.emplace();
    for (const auto& n : names_) sys.add_variable(n);
    for (const auto& c : constraints_) {
        num::Equation eq{std::vector<Rational>(names_.size()), c.constant};
        for (const auto& [coeff, var] : c.terms) eq.coeffs[static_cast<std::size_t>(var)] += coeff;
        sys.add_equation(std::move(eq));
    }
    return sys;
}

std::optional<num::Assignment> ConstraintSystem::solve() const {
    return num::feasible(to_linear_system());
}

std::optional<num::Assignment> solve_and_report(const ConstraintSystem& acc) {
    return acc.solve();
}

bool CheckReport::accepted() const {
    if (!type_errors.empty()) return false;
    for (const auto& d : defs)
        if (!d.accepted) return false;
    if (has_main && !main_verdict.accepted) return false;
    return true;
}

std::optional<Rational> CheckReport::session_probability(const std::string& name) const {
    for (const auto& [n, p] : main_context)
        if (n == name) return p;
    return std::nullopt;
}

namespace {

[[noreturn]] void violate(const std::string& rule, const ProcPtr& at, const std::string& message) {
    throw TypingError{rule, render_process(at), message};
}

struct Checker {
    const Program& prog;
    ConstraintSystem& acc;

    SymType take(SymContext& ctx, const std::string& name, const std::string& rule,
                 const ProcPtr& at) {
        auto it = ctx.find(name);
        if (it == ctx.end()) violate(rule, at, "name '" + name + "' is not in the context");
        SymType e = std::move(it->second);
        ctx.erase(it);
        return e;
    }

    // Head of a context entry after unfolding; null when the entry is not a
    // session type.
    TypePtr session_head(const SymType& e) {
        if (!e.base.is_session()) return nullptr;
        return unfold(e.base.session, prog.types);
    }

    bool entry_unrestricted(const SymType& e) {
        if (e.annot_var) return false; // symbolic choice or completed
        return is_unrestricted(e.base, prog.types);
    }

    void check_leaf_residual(const SymContext& ctx, const std::string& rule, const ProcPtr& at) {
        for (const auto& [name, e] : ctx)
            if (!entry_unrestricted(e))
                violate(rule, at, "leftover name '" + name + "' does not have an unrestricted type");
    }

    // Entry must equal the expected concrete type; a symbolic annotation
    // turns the comparison of the top-level probability into a constraint.
    void match_concrete(const SymType& e, const ValueType& expected, const std::string& rule,
                        const ProcPtr& at) {
        if (!e.annot_var) {
            if (!type_equal(e.base, expected, prog.types))
                violate(rule, at,
                        "type mismatch: have " + render_sym(e) + ", need " +
                            render_value_type(expected));
            return;
        }
        if (e.base.is_completed()) {
            if (!expected.is_completed())
                violate(rule, at, "type mismatch: completed session vs " + render_value_type(expected));
            acc.add_pin(*e.annot_var, expected.completed.value());
            return;
        }
        TypePtr head = session_head(e);
        if (!head || head->kind != TypeKind::Choice)
            violate(rule, at, "internal: symbolic annotation on a non-choice entry");
        if (!expected.is_session())
            violate(rule, at, "type mismatch: session type vs " + render_value_type(expected));
        TypePtr eh = unfold(expected.session, prog.types);
        if (eh->kind != TypeKind::Choice ||
            !session_equal(head->left, eh->left, prog.types) ||
            !session_equal(head->right, eh->right, prog.types))
            violate(rule, at, "type mismatch on choice arms");
        acc.add_pin(*e.annot_var, eh->prob.value());
    }

    std::string render_sym(const SymType& e) {
        std::string s = render_value_type(e.base);
        if (e.annot_var) s += " (annotation " + acc.name_of(*e.annot_var) + ")";
        return s;
    }

    // Context decomposition for t-branch/t-choice: entries whose unfolded
    // head is an internal choice or a completed session split into fresh
    // [0,1] unknowns v1, v2 with p*v1 + (1-p)*v2 = r; everything else passes
    // unchanged to both premises.
    std::pair<SymContext, SymContext> split(const SymContext& ctx, const Probability& p) {
        SymContext lhs, rhs;
        for (const auto& [name, e] : ctx) {
            bool splittable = false;
            Rational concrete;
            if (e.base.is_completed()) {
                splittable = true;
                concrete = e.base.completed.value();
            } else if (e.base.is_session()) {
                TypePtr head = unfold(e.base.session, prog.types);
                if (head->kind == TypeKind::Choice) {
                    splittable = true;
                    concrete = head->prob.value();
                }
            }
            if (!splittable) {
                lhs.emplace(name, e);
                rhs.emplace(name, e);
                continue;
            }
            int v1 = acc.fresh(name + ".l");
            int v2 = acc.fresh(name + ".r");
            Constraint c;
            c.terms = {{p.value(), v1}, {p.complement().value(), v2}};
            if (e.annot_var) {
                c.terms.emplace_back(Rational(-1), *e.annot_var);
                c.constant = Rational(0);
            } else {
                c.constant = concrete;
            }
            acc.add(std::move(c));
            lhs.emplace(name, SymType{e.base, v1});
            rhs.emplace(name, SymType{e.base, v2});
        }
        return {std::move(lhs), std::move(rhs)};
    }

    // The probability annotation demanded of a selection: concrete mismatch
    // is a rule violation, a symbolic one becomes a constraint.
    void pin_selection(const SymType& e, const TypePtr& head, const Rational& demanded,
                       const std::string& rule, const ProcPtr& at) {
        if (e.annot_var) {
            acc.add_pin(*e.annot_var, demanded);
            return;
        }
        if (head->prob.value() != demanded)
            violate(rule, at,
                    "selection requires annotation " + demanded.str() + ", type has " +
                        head->prob.str());
    }

    void check(SymContext ctx, const ProcPtr& p) {
        switch (p->kind) {
        case ProcKind::Idle:
            check_leaf_residual(ctx, "t-idle", p);
            return;

        case ProcKind::Done: {
            SymType e = take(ctx, p->chan, "t-done", p);
            TypePtr head = session_head(e);
            if (e.annot_var || !head || head->kind != TypeKind::EndSucc)
                violate("t-done", p, "'" + p->chan + "' must have the successful termination type");
            check_leaf_residual(ctx, "t-done", p);
            return;
        }

        case ProcKind::Call: {
            const ProcDef& def = prog.defs.at(p->callee);
            for (std::size_t i = 0; i < p->args.size(); ++i) {
                const ValueType& declared = def.params[i].second;
                if (!is_safe(declared, prog.types))
                    violate("t-var", p,
                            "parameter '" + def.params[i].first + "' of " + def.name +
                                " has an unsafe type");
                const Message& arg = p->args[i];
                switch (arg.kind) {
                case Message::Kind::Name: {
                    SymType e = take(ctx, arg.name, "t-var", p);
                    match_concrete(e, declared, "t-var", p);
                    break;
                }
                case Message::Kind::IntLit:
                    if (!declared.is_base() || declared.base != BaseType::Int)
                        violate("t-var", p, "integer literal passed where " +
                                                render_value_type(declared) + " is expected");
                    break;
                case Message::Kind::UnitLit:
                    if (!declared.is_base() || declared.base != BaseType::Unit)
                        violate("t-var", p, "unit literal passed where " +
                                                render_value_type(declared) + " is expected");
                    break;
                }
            }
            check_leaf_residual(ctx, "t-var", p);
            return;
        }

        case ProcKind::In: {
            SymType e = take(ctx, p->chan, "t-in", p);
            TypePtr head = session_head(e);
            if (e.annot_var || !head || head->kind != TypeKind::In)
                violate("t-in", p, "'" + p->chan + "' is not an input endpoint here");
            if (ctx.count(p->binder))
                violate("t-in", p, "binder '" + p->binder + "' already occurs in the context");
            ctx.emplace(p->binder, SymType::concrete(head->payload));
            ctx.insert_or_assign(p->chan, SymType::concrete(ValueType::make_session(head->cont)));
            check(std::move(ctx), p->cont);
            return;
        }

        case ProcKind::Out: {
            SymType e = take(ctx, p->chan, "t-out", p);
            TypePtr head = session_head(e);
            if (e.annot_var || !head || head->kind != TypeKind::Out)
                violate("t-out", p, "'" + p->chan + "' is not an output endpoint here");
            const ValueType& payload = head->payload;
            if (!is_safe(payload, prog.types))
                violate("t-out", p, "message type is not safe");
            switch (p->msg.kind) {
            case Message::Kind::Name: {
                SymType m = take(ctx, p->msg.name, "t-out", p);
                match_concrete(m, payload, "t-out", p);
                break;
            }
            case Message::Kind::IntLit:
                if (!payload.is_base() || payload.base != BaseType::Int)
                    violate("t-out", p, "integer literal sent where " +
                                            render_value_type(payload) + " is expected");
                break;
            case Message::Kind::UnitLit:
                if (!payload.is_base() || payload.base != BaseType::Unit)
                    violate("t-out", p, "unit literal sent where " + render_value_type(payload) +
                                            " is expected");
                break;
            }
            ctx.insert_or_assign(p->chan, SymType::concrete(ValueType::make_session(head->cont)));
            check(std::move(ctx), p->cont);
            return;
        }

        case ProcKind::SelLeft:
        case ProcKind::SelRight: {
            bool isLeft = p->kind == ProcKind::SelLeft;
            const std::string rule = isLeft ? "t-left" : "t-right";
            SymType e = take(ctx, p->chan, rule, p);
            TypePtr head = session_head(e);
            if (!head || head->kind != TypeKind::Choice)
                violate(rule, p, "'" + p->chan + "' is not an internal choice here");
            pin_selection(e, head, isLeft ? Rational(1) : Rational(0), rule, p);
            ctx.insert_or_assign(p->chan, SymType::concrete(ValueType::make_session(
                                              isLeft ? head->left : head->right)));
            check(std::move(ctx), p->cont);
            return;
        }

        case ProcKind::Case: {
            SymType e = take(ctx, p->chan, "t-branch", p);
            TypePtr head = session_head(e);
            if (e.annot_var || !head || head->kind != TypeKind::Branch)
                violate("t-branch", p, "'" + p->chan + "' is not an external branch here");
            auto [lhs, rhs] = split(ctx, head->prob);
            lhs.emplace(p->chan, SymType::concrete(ValueType::make_session(head->left)));
            rhs.emplace(p->chan, SymType::concrete(ValueType::make_session(head->right)));
            check(std::move(lhs), p->left);
            check(std::move(rhs), p->right);
            return;
        }

        case ProcKind::Choice: {
            auto [lhs, rhs] = split(ctx, p->prob);
            check(std::move(lhs), p->left);
            check(std::move(rhs), p->right);
            return;
        }

        case ProcKind::Par: {
            SymType e = take(ctx, p->cut_name, "t-par", p);
            Rational pr = success_prob(p->cut_type, prog.types);
            if (e.annot_var) {
                if (!e.base.is_completed())
                    violate("t-par", p, "internal: symbolic cut entry is not a completed session");
                acc.add_pin(*e.annot_var, pr);
            } else if (!e.base.is_completed() || e.base.completed.value() != pr) {
                violate("t-par", p,
                        "cut '" + p->cut_name + "' requires type #[" + pr.str() +
                            "] in the context, found " + render_sym(e));
            }
            auto fnL = needed_names(p->left);
            auto fnR = needed_names(p->right);
            for (const auto& n : fnL)
                if (n != p->cut_name && fnR.count(n))
                    violate("t-par", p, "components share '" + n + "' besides the cut");
            SymContext lhs, rhs;
            for (auto& [name, entry] : ctx) {
                if (fnL.count(name)) {
                    lhs.emplace(name, std::move(entry));
                } else if (fnR.count(name)) {
                    rhs.emplace(name, std::move(entry));
                } else if (entry_unrestricted(entry)) {
                    lhs.emplace(name, std::move(entry)); // unused, discardable
                } else {
                    violate("t-par", p,
                            "name '" + name + "' is used by neither component and is not unrestricted");
                }
            }
            lhs.emplace(p->cut_name, SymType::concrete(ValueType::make_session(p->cut_type)));
            rhs.emplace(p->cut_name,
                        SymType::concrete(ValueType::make_session(dual(p->cut_type, prog.types))));
            check(std::move(lhs), p->left);
            check(std::move(rhs), p->right);
            return;
        }

        case ProcKind::New: {
            if (!cuts_name(p->cont, p->chan))
                violate("t-new", p, "restricted name '" + p->chan + "' is never cut by a parallel composition");
            if (ctx.count(p->chan))
                violate("t-new", p, "restricted name '" + p->chan + "' already occurs in the context");
            int v = acc.fresh(p->chan + ".new");
            ctx.emplace(p->chan, SymType{ValueType::make_completed(Probability::zero()), v});
            check(std::move(ctx), p->cont);
            return;
        }
        }
        throw std::logic_error("unreachable");
    }

    static bool cuts_name(const ProcPtr& p, const std::string& name) {
        switch (p->kind) {
        case ProcKind::Idle:
        case ProcKind::Done:
        case ProcKind::Call:
            return false;
        case ProcKind::In:
            return p->binder != name && cuts_name(p->cont, name);
        case ProcKind::Out:
        case ProcKind::SelLeft:
        case ProcKind::SelRight:
            return cuts_name(p->cont, name);
        case ProcKind::Case:
        case ProcKind::Choice:
            return cuts_name(p->left, name) || cuts_name(p->right, name);
        case ProcKind::Par:
            return p->cut_name == name || cuts_name(p->left, name) || cuts_name(p->right, name);
        case ProcKind::New:
            return p->chan != name && cuts_name(p->cont, name);
        }
        return false;
    }
};

// Collects every session type that occurs in a type tree, including payloads.
void collect_session_types(const TypePtr& t, std::vector<TypePtr>& out,
                           std::set<const SessionType*>& seen) {
    if (!seen.insert(t.get()).second) return;
    out.push_back(t);
    switch (t->kind) {
    case TypeKind::EndFail:
    case TypeKind::EndSucc:
    case TypeKind::Ref:
        return;
    case TypeKind::In:
    case TypeKind::Out:
        if (t->payload.is_session()) collect_session_types(t->payload.session, out, seen);
        collect_session_types(t->cont, out, seen);
        return;
    case TypeKind::Branch:
    case TypeKind::Choice:
        collect_session_types(t->left, out, seen);
        collect_session_types(t->right, out, seen);
        return;
    }
}

void collect_proc_types(const ProcPtr& p, std::vector<TypePtr>& out,
                        std::set<const SessionType*>& seen) {
    switch (p->kind) {
    case ProcKind::Idle:
    case ProcKind::Done:
    case ProcKind::Call:
        return;
    case ProcKind::In:
    case ProcKind::Out:
    case ProcKind::SelLeft:
    case ProcKind::SelRight:
    case ProcKind::New:
        collect_proc_types(p->cont, out, seen);
        return;
    case ProcKind::Case:
    case ProcKind::Choice:
        collect_proc_types(p->left, out, seen);
        collect_proc_types(p->right, out, seen);
        return;
    case ProcKind::Par:
        collect_session_types(p->cut_type, out, seen);
        collect_proc_types(p->left, out, seen);
        collect_proc_types(p->right, out, seen);
        return;
    }
}

} // namespace

void check_process(const Program& prog, SymContext ctx, const ProcPtr& p, ConstraintSystem& acc) {
    Checker{prog, acc}.check(std::move(ctx), p);
}

CheckReport check_program(const Program& prog) {
    CheckReport report;

    // All session types mentioned anywhere must be well-formed before the
    // rules run: payload types included, since they may enter contexts.
    {
        std::vector<TypePtr> types;
        std::set<const SessionType*> seen;
        for (const auto& name : prog.types.user_order())
            collect_session_types(prog.types.body(name), types, seen);
        for (const auto& name : prog.def_order) {
            const ProcDef& d = prog.defs.at(name);
            for (const auto& [pn, pt] : d.params)
                if (pt.is_session()) collect_session_types(pt.session, types, seen);
            collect_proc_types(d.body, types, seen);
        }
        if (prog.main) collect_proc_types(prog.main, types, seen);
        for (const auto& t : types) {
            if (auto err = check_wellformed(t, prog.types))
                report.type_errors.emplace_back(render_type(t), err->str());
        }
        if (!report.type_errors.empty()) return report;
    }

    for (const auto& name : prog.def_order) {
        const ProcDef& d = prog.defs.at(name);
        DefVerdict v;
        v.name = name;
        ConstraintSystem acc;
        SymContext ctx;
        for (const auto& [pn, pt] : d.params) ctx.emplace(pn, SymType::concrete(pt));
        try {
            check_process(prog, std::move(ctx), d.body, acc);
            v.constraint_count = static_cast<int>(acc.constraints().size());
            if (solve_and_report(acc)) {
                v.accepted = true;
            } else {
                v.infeasible = true;
            }
        } catch (const TypingError& e) {
            v.local_error = e;
        }
        report.defs.push_back(std::move(v));
    }

    if (prog.main) {
        report.has_main = true;
        DefVerdict v;
        v.name = "main";
        ConstraintSystem acc;
        SymContext ctx;
        std::map<std::string, int> seeds;
        for (const auto& n : needed_names(prog.main)) {
            int var = acc.fresh(n + ".main");
            seeds.emplace(n, var);
            ctx.emplace(n, SymType{ValueType::make_completed(Probability::zero()), var});
        }
        try {
            check_process(prog, std::move(ctx), prog.main, acc);
            v.constraint_count = static_cast<int>(acc.constraints().size());
            if (auto model = solve_and_report(acc)) {
                v.accepted = true;
                for (const auto& [n, var] : seeds)
                    report.main_context.emplace_back(n, model->at(acc.name_of(var)));
            } else {
                v.infeasible = true;
            }
        } catch (const TypingError& e) {
            v.local_error = e;
        }
        report.main_verdict = std::move(v);
    }
    return report;
}

} // namespace psc
