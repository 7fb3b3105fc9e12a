#include "psc/runtime.hpp"

#include "psc/printer.hpp"
#include "psc/typeops.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>

namespace psc {

std::string NameSupply::fresh(const std::string& base) {
    for (long long i = 1;; ++i) {
        std::string candidate = base + "_" + std::to_string(i);
        if (used_.insert(candidate).second) return candidate;
    }
}

RunNodePtr RunNode::make_leaf(Leaf l) {
    auto n = std::make_shared<RunNode>();
    n->is_leaf = true;
    n->leaf = std::move(l);
    return n;
}

RunNodePtr RunNode::make_node(Probability p, RunNodePtr l, RunNodePtr r) {
    auto n = std::make_shared<RunNode>();
    n->is_leaf = false;
    n->prob = std::move(p);
    n->left = std::move(l);
    n->right = std::move(r);
    return n;
}

namespace {

bool is_sequential(const ProcPtr& p) {
    switch (p->kind) {
    case ProcKind::Par:
    case ProcKind::New:
    case ProcKind::Choice:
        return false;
    default:
        return true;
    }
}

ProcPtr freshen_binders(const ProcPtr& p, NameSupply& names) {
    switch (p->kind) {
    case ProcKind::Idle:
    case ProcKind::Done:
    case ProcKind::Call:
        return p;
    case ProcKind::In: {
        std::string nb = names.fresh(p->binder);
        ProcPtr cont = substitute(p->cont, p->binder, Message::make_name(nb));
        return make_in(p->chan, nb, freshen_binders(cont, names));
    }
    case ProcKind::Out:
        return make_out(p->chan, p->msg, freshen_binders(p->cont, names));
    case ProcKind::SelLeft:
        return make_sel_left(p->chan, freshen_binders(p->cont, names));
    case ProcKind::SelRight:
        return make_sel_right(p->chan, freshen_binders(p->cont, names));
    case ProcKind::Case:
        return make_case(p->chan, freshen_binders(p->left, names), freshen_binders(p->right, names));
    case ProcKind::Choice:
        return make_pchoice(p->prob, freshen_binders(p->left, names),
                            freshen_binders(p->right, names));
    case ProcKind::Par:
        return make_par(freshen_binders(p->left, names), p->cut_name, p->cut_type,
                        freshen_binders(p->right, names));
    case ProcKind::New: {
        std::string nc = names.fresh(p->chan);
        ProcPtr body = substitute(p->cont, p->chan, Message::make_name(nc));
        return make_new(nc, freshen_binders(body, names));
    }
    }
    throw std::logic_error("unreachable");
}

ProcPtr instantiate(const ProcDef& def, const std::vector<Message>& args, NameSupply& names) {
    ProcPtr body = freshen_binders(def.body, names);
    // Two-phase parameter substitution so an argument equal to a later
    // parameter name is not captured.
    std::vector<std::string> temps;
    for (const auto& [pn, pt] : def.params) temps.push_back(names.fresh(pn));
    for (std::size_t i = 0; i < temps.size(); ++i)
        body = substitute(body, def.params[i].first, Message::make_name(temps[i]));
    for (std::size_t i = 0; i < temps.size(); ++i)
        body = substitute(body, temps[i], args[i]);
    return body;
}

// ---------------------------------------------------------------------------
// Selection-probability scan: given a session whose current head is a choice
// or branch, the probability that the component owning the internal-choice
// endpoint eventually selects "left" is determined by its downstream
// commitments (selections, call signatures, delegations) weighted by the
// choices and branches in between. Keeping the cut annotations synchronized
// with these values is what makes rendered reducts re-checkable.
struct CutScan {
    const Program& prog;
    const Leaf& leaf;
    std::map<std::string, Rational> memo;
    std::set<std::string> in_progress;

    std::optional<Rational> head_prob_of(const TypePtr& t) {
        TypePtr h = unfold(t, prog.types);
        if (h->kind == TypeKind::Branch || h->kind == TypeKind::Choice) return h->prob.value();
        return std::nullopt;
    }

    // Current branching probability of cut c, recomputing from the process
    // side when possible.
    Rational cut_prob(const std::string& c) {
        auto it = leaf.cuts.find(c);
        if (it == leaf.cuts.end()) throw std::logic_error("scan over unknown session " + c);
        auto stored = head_prob_of(it->second);
        if (!stored) throw std::logic_error("scan over non-branching session " + c);
        auto m = memo.find(c);
        if (m != memo.end()) return m->second;
        if (!in_progress.insert(c).second) return *stored;
        std::optional<Rational> fresh = sel_for_cut(c);
        in_progress.erase(c);
        Rational result = fresh ? *fresh : *stored;
        memo.emplace(c, result);
        return result;
    }

    // Session views as they advance along the scanned path. A name missing
    // from the environment is still at its cut entry, whose top-level
    // probability is dynamic; once advanced, the deeper annotations are
    // static parts of the type tree.
    using Env = std::map<std::string, TypePtr>;

    TypePtr view(const Env& env, const std::string& c) {
        auto it = env.find(c);
        if (it != env.end()) return unfold(it->second, prog.types);
        auto ct = leaf.cuts.find(c);
        if (ct == leaf.cuts.end()) return nullptr;
        return unfold(ct->second, prog.types);
    }

    std::optional<Rational> case_weight(const Env& env, const std::string& c) {
        auto it = env.find(c);
        if (it == env.end()) {
            if (!leaf.cuts.count(c)) return std::nullopt;
            return cut_prob(c);
        }
        TypePtr h = unfold(it->second, prog.types);
        if (h->kind != TypeKind::Branch && h->kind != TypeKind::Choice) return std::nullopt;
        return h->prob.value();
    }

    std::optional<Rational> sel_for_cut(const std::string& x) {
        for (const auto& comp : leaf.procs) {
            if (!free_names(comp).count(x)) continue;
            if (auto v = sel_prob(comp, x, Env{})) return v;
        }
        return std::nullopt;
    }

    // Probability that process p selects "left" as its next action on x;
    // nullopt when p does not drive the choice (it holds the branch side or
    // does not use x).
    std::optional<Rational> sel_prob(const ProcPtr& p, const std::string& x, Env env) {
        switch (p->kind) {
        case ProcKind::Idle:
        case ProcKind::Done:
            return std::nullopt;
        case ProcKind::SelLeft:
        case ProcKind::SelRight: {
            bool left = p->kind == ProcKind::SelLeft;
            if (p->chan == x) return Rational(left ? 1 : 0);
            if (TypePtr h = view(env, p->chan);
                h && (h->kind == TypeKind::Branch || h->kind == TypeKind::Choice))
                env[p->chan] = left ? h->left : h->right;
            return sel_prob(p->cont, x, std::move(env));
        }
        case ProcKind::In: {
            if (p->chan == x || p->binder == x) return std::nullopt;
            if (TypePtr h = view(env, p->chan);
                h && (h->kind == TypeKind::In || h->kind == TypeKind::Out)) {
                if (h->payload.is_session()) env[p->binder] = h->payload.session;
                env[p->chan] = h->cont;
            }
            return sel_prob(p->cont, x, std::move(env));
        }
        case ProcKind::Out: {
            if (p->chan == x) return std::nullopt;
            TypePtr h = view(env, p->chan);
            if (p->msg.kind == Message::Kind::Name && p->msg.name == x) {
                // Delegated: the payload annotation pins the selection.
                if (!h || (h->kind != TypeKind::In && h->kind != TypeKind::Out)) return std::nullopt;
                if (!h->payload.is_session()) return std::nullopt;
                return head_prob_of(h->payload.session);
            }
            if (h && (h->kind == TypeKind::In || h->kind == TypeKind::Out)) env[p->chan] = h->cont;
            return sel_prob(p->cont, x, std::move(env));
        }
        case ProcKind::Case: {
            if (p->chan == x) return std::nullopt; // branch side does not drive it
            std::optional<Rational> w = case_weight(env, p->chan);
            Env envL = env, envR = std::move(env);
            if (TypePtr h = view(envL, p->chan);
                h && (h->kind == TypeKind::Branch || h->kind == TypeKind::Choice)) {
                envL[p->chan] = h->left;
                envR[p->chan] = h->right;
            }
            auto a = sel_prob(p->left, x, std::move(envL));
            auto b = sel_prob(p->right, x, std::move(envR));
            if (!a && !b) return std::nullopt;
            if (a && b && w) return *w * *a + (Rational(1) - *w) * *b;
            return a ? a : b;
        }
        case ProcKind::Choice: {
            auto a = sel_prob(p->left, x, env);
            auto b = sel_prob(p->right, x, std::move(env));
            if (!a && !b) return std::nullopt;
            if (a && b) {
                const Rational& q = p->prob.value();
                return q * *a + (Rational(1) - q) * *b;
            }
            return a ? a : b;
        }
        case ProcKind::Par: {
            if (p->cut_name == x) return std::nullopt;
            env[p->cut_name] = p->cut_type;
            if (auto a = sel_prob(p->left, x, env)) return a;
            return sel_prob(p->right, x, std::move(env));
        }
        case ProcKind::New:
            if (p->chan == x) return std::nullopt;
            env.erase(p->chan);
            return sel_prob(p->cont, x, std::move(env));
        case ProcKind::Call: {
            const ProcDef& def = prog.defs.at(p->callee);
            for (std::size_t i = 0; i < p->args.size(); ++i) {
                if (p->args[i].kind != Message::Kind::Name || p->args[i].name != x) continue;
                const ValueType& declared = def.params[i].second;
                if (!declared.is_session()) return std::nullopt;
                return head_prob_of(declared.session);
            }
            return std::nullopt;
        }
        }
        return std::nullopt;
    }
};

void recompute_cuts(Leaf& leaf, const Program& prog) {
    CutScan scan{prog, leaf, {}, {}};
    std::map<std::string, TypePtr> updated = leaf.cuts;
    for (const auto& [x, ann] : leaf.cuts) {
        TypePtr h = unfold(ann, prog.types);
        if (h->kind != TypeKind::Branch && h->kind != TypeKind::Choice) continue;
        Rational p = scan.cut_prob(x);
        if (p == h->prob.value()) continue;
        updated[x] = h->kind == TypeKind::Branch
                         ? make_branch(Probability(p), h->left, h->right)
                         : make_choice(Probability(p), h->left, h->right);
    }
    leaf.cuts = std::move(updated);
}

// ---------------------------------------------------------------------------
// Normal-form construction

struct NfBuilder {
    const Program& prog;
    NameSupply& names;
    std::vector<std::string>& restrictions;

    RunNodePtr build(const ProcPtr& p) {
        switch (p->kind) {
        case ProcKind::Choice:
            if (p->prob.is_one()) return build(p->left);   // trivial choice collapses
            if (p->prob.is_zero()) return build(p->right);
            return RunNode::make_node(p->prob, build(p->left), build(p->right));
        case ProcKind::Par: {
            RunNodePtr l = build(p->left);
            RunNodePtr r = build(p->right);
            return merge(l, r, &p->cut_name, &p->cut_type);
        }
        case ProcKind::New: {
            std::string fresh = names.fresh(p->chan);
            restrictions.push_back(fresh);
            return build(substitute(p->cont, p->chan, Message::make_name(fresh)));
        }
        default:
            return RunNode::make_leaf(Leaf{{p}, {}, 0});
        }
    }

    // Parallel composition of two normal forms: distributes choices outwards
    // and concatenates the exposed components, recording the cut when the
    // composition comes from a parallel operator.
    RunNodePtr merge(const RunNodePtr& l, const RunNodePtr& r, const std::string* cut,
                     const TypePtr* cut_type) {
        if (!l->is_leaf)
            return RunNode::make_node(l->prob, merge(l->left, r, cut, cut_type),
                                      merge(l->right, r, cut, cut_type));
        if (!r->is_leaf)
            return RunNode::make_node(r->prob, merge(l, r->left, cut, cut_type),
                                      merge(l, r->right, cut, cut_type));
        Leaf out;
        out.procs = l->leaf.procs;
        out.procs.insert(out.procs.end(), r->leaf.procs.begin(), r->leaf.procs.end());
        out.cuts = l->leaf.cuts;
        for (const auto& [n, t] : r->leaf.cuts) {
            if (!out.cuts.emplace(n, t).second)
                throw std::logic_error("duplicate session record for " + n);
        }
        if (cut && !out.cuts.emplace(*cut, *cut_type).second)
            throw std::logic_error("duplicate session record for " + *cut);
        out.steps = std::max(l->leaf.steps, r->leaf.steps);
        return RunNode::make_leaf(std::move(out));
    }

    // Re-normalizes an existing leaf whose components may have become
    // composite; base cuts are carried into every resulting leaf.
    RunNodePtr rebuild(const std::vector<ProcPtr>& comps,
                       const std::map<std::string, TypePtr>& base_cuts, long long steps) {
        RunNodePtr acc = RunNode::make_leaf(Leaf{{}, base_cuts, steps});
        for (const auto& c : comps) acc = merge(acc, build(c), nullptr, nullptr);
        return finalize(acc, steps);
    }

    RunNodePtr finalize(const RunNodePtr& node, long long steps) {
        if (!node->is_leaf)
            return RunNode::make_node(node->prob, finalize(node->left, steps),
                                      finalize(node->right, steps));
        Leaf leaf = node->leaf;
        leaf.steps = steps;
        recompute_cuts(leaf, prog);
        return RunNode::make_leaf(std::move(leaf));
    }
};

// ---------------------------------------------------------------------------
// Redex search and firing

struct Redex {
    std::string chan;
    std::size_t first, second; // component indices
    enum class Kind { Com, Left, Right } kind;
};

std::optional<Redex> find_redex(const Leaf& leaf) {
    std::optional<Redex> best;
    for (std::size_t i = 0; i < leaf.procs.size(); ++i) {
        for (std::size_t j = i + 1; j < leaf.procs.size(); ++j) {
            const ProcPtr& a = leaf.procs[i];
            const ProcPtr& b = leaf.procs[j];
            auto consider = [&](const Redex& r) {
                if (!best || r.chan < best->chan) best = r;
            };
            if (a->kind == ProcKind::Out && b->kind == ProcKind::In && a->chan == b->chan)
                consider({a->chan, i, j, Redex::Kind::Com});
            else if (a->kind == ProcKind::In && b->kind == ProcKind::Out && a->chan == b->chan)
                consider({a->chan, j, i, Redex::Kind::Com}); // first = sender
            else if (a->kind == ProcKind::SelLeft && b->kind == ProcKind::Case && a->chan == b->chan)
                consider({a->chan, i, j, Redex::Kind::Left});
            else if (a->kind == ProcKind::Case && b->kind == ProcKind::SelLeft && a->chan == b->chan)
                consider({a->chan, j, i, Redex::Kind::Left});
            else if (a->kind == ProcKind::SelRight && b->kind == ProcKind::Case && a->chan == b->chan)
                consider({a->chan, i, j, Redex::Kind::Right});
            else if (a->kind == ProcKind::Case && b->kind == ProcKind::SelRight && a->chan == b->chan)
                consider({a->chan, j, i, Redex::Kind::Right});
        }
    }
    return best;
}

// Advances the session annotation past the fired action.
TypePtr advance_cut(const TypePtr& ann, Redex::Kind kind, const TypeTable& table) {
    TypePtr h = unfold(ann, table);
    switch (kind) {
    case Redex::Kind::Com:
        if (h->kind != TypeKind::In && h->kind != TypeKind::Out)
            throw std::logic_error("session annotation out of sync (communication)");
        return h->cont;
    case Redex::Kind::Left:
        if (h->kind != TypeKind::Branch && h->kind != TypeKind::Choice)
            throw std::logic_error("session annotation out of sync (selection)");
        return h->left;
    case Redex::Kind::Right:
        if (h->kind != TypeKind::Branch && h->kind != TypeKind::Choice)
            throw std::logic_error("session annotation out of sync (selection)");
        return h->right;
    }
    throw std::logic_error("unreachable");
}

struct Stepper {
    const Program& prog;
    NameSupply& names;
    std::vector<std::string>& restrictions;

    RunNodePtr step_tree(const RunNodePtr& node) {
        if (!node->is_leaf)
            return RunNode::make_node(node->prob, step_tree(node->left), step_tree(node->right));
        return step_leaf(node);
    }

    RunNodePtr step_leaf(const RunNodePtr& node) {
        const Leaf& leaf = node->leaf;
        bool has_call = std::any_of(leaf.procs.begin(), leaf.procs.end(),
                                    [](const ProcPtr& p) { return p->kind == ProcKind::Call; });
        if (!has_call && !find_redex(leaf)) return node; // terminated or stuck

        NfBuilder nf{prog, names, restrictions};
        RunNodePtr expanded;
        if (has_call) {
            std::vector<ProcPtr> comps;
            comps.reserve(leaf.procs.size());
            for (const auto& p : leaf.procs) {
                if (p->kind == ProcKind::Call)
                    comps.push_back(instantiate(prog.defs.at(p->callee), p->args, names));
                else
                    comps.push_back(p);
            }
            expanded = nf.rebuild(comps, leaf.cuts, leaf.steps + 1);
        } else {
            Leaf copy = leaf;
            copy.steps += 1;
            expanded = RunNode::make_leaf(std::move(copy));
        }
        return fire_leaves(expanded);
    }

    RunNodePtr fire_leaves(const RunNodePtr& node) {
        if (!node->is_leaf)
            return RunNode::make_node(node->prob, fire_leaves(node->left), fire_leaves(node->right));
        const Leaf& leaf = node->leaf;
        auto redex = find_redex(leaf);
        if (!redex) return node;

        std::vector<ProcPtr> comps = leaf.procs;
        const ProcPtr& active = comps[redex->first];
        const ProcPtr& passive = comps[redex->second];
        switch (redex->kind) {
        case Redex::Kind::Com:
            comps[redex->second] = substitute(passive->cont, passive->binder, active->msg);
            comps[redex->first] = active->cont;
            break;
        case Redex::Kind::Left:
            comps[redex->first] = active->cont;
            comps[redex->second] = passive->left;
            break;
        case Redex::Kind::Right:
            comps[redex->first] = active->cont;
            comps[redex->second] = passive->right;
            break;
        }
        std::map<std::string, TypePtr> cuts = leaf.cuts;
        auto it = cuts.find(redex->chan);
        if (it == cuts.end()) throw std::logic_error("fired redex on unrecorded session " + redex->chan);
        it->second = advance_cut(it->second, redex->kind, prog.types);

        NfBuilder nf{prog, names, restrictions};
        return nf.rebuild(comps, cuts, leaf.steps);
    }
};

} // namespace

RunState normalize(const ProcPtr& p, const Program& prog) {
    RunState state;
    state.prog = &prog;
    for (const auto& name : prog.def_order) {
        const ProcDef& d = prog.defs.at(name);
        std::set<std::string> all;
        collect_names(d.body, all);
        for (const auto& [pn, pt] : d.params) all.insert(pn);
        for (const auto& n : all) state.names.reserve(n);
    }
    std::set<std::string> all;
    collect_names(p, all);
    for (const auto& n : all) state.names.reserve(n);

    // Upfront alpha-renaming: every binder in the process becomes fresh, so
    // later substitutions cannot capture.
    NfBuilder nf{prog, state.names, state.restrictions};
    state.root = nf.finalize(nf.build(freshen_binders(p, state.names)), 0);
    return state;
}

RunState step_round(const RunState& s) {
    RunState next;
    next.prog = s.prog;
    next.restrictions = s.restrictions;
    next.names = s.names;
    Stepper stepper{*s.prog, next.names, next.restrictions};
    next.root = stepper.step_tree(s.root);
    return next;
}

bool is_terminated(const Leaf& leaf) {
    return std::all_of(leaf.procs.begin(), leaf.procs.end(), [](const ProcPtr& p) {
        return p->kind == ProcKind::Idle || p->kind == ProcKind::Done;
    });
}

bool leaf_can_step(const Leaf& leaf) {
    if (std::any_of(leaf.procs.begin(), leaf.procs.end(),
                    [](const ProcPtr& p) { return p->kind == ProcKind::Call; }))
        return true;
    return find_redex(leaf).has_value();
}

namespace {

Rational fold_measure(const RunNodePtr& node, const std::function<Rational(const Leaf&)>& f) {
    if (node->is_leaf) return f(node->leaf);
    return node->prob.value() * fold_measure(node->left, f) +
           node->prob.complement().value() * fold_measure(node->right, f);
}

} // namespace

Rational terminated_weight(const RunState& s) {
    return fold_measure(s.root, [](const Leaf& l) { return Rational(is_terminated(l) ? 1 : 0); });
}

Rational success_measure(const RunState& s, const std::string& session) {
    for (const auto& r : s.restrictions)
        if (r == session)
            throw std::invalid_argument("cannot measure restricted session " + session);
    return fold_measure(s.root, [&](const Leaf& l) {
        for (const auto& p : l.procs)
            if (p->kind == ProcKind::Done && p->chan == session) return Rational(1);
        return Rational(0);
    });
}

void collect_leaves(const RunNodePtr& node, std::vector<const Leaf*>& out) {
    if (node->is_leaf) {
        out.push_back(&node->leaf);
        return;
    }
    collect_leaves(node->left, out);
    collect_leaves(node->right, out);
}

// ---------------------------------------------------------------------------
// Rendering a state back into an annotated process

namespace {

enum class Usage { In, Out, Sel, Case, Done };

std::optional<Usage> usage_of_head(const TypePtr& t, const TypeTable& table) {
    switch (unfold(t, table)->kind) {
    case TypeKind::In: return Usage::In;
    case TypeKind::Out: return Usage::Out;
    case TypeKind::Choice: return Usage::Sel;
    case TypeKind::Branch: return Usage::Case;
    case TypeKind::EndSucc: return Usage::Done;
    default: return std::nullopt;
    }
}

std::optional<Usage> first_usage(const ProcPtr& p, const std::string& x, const Leaf& leaf,
                                 const Program& prog, std::map<std::string, TypePtr> env = {}) {
    auto view = [&](const std::string& c) -> TypePtr {
        auto it = env.find(c);
        if (it != env.end()) return unfold(it->second, prog.types);
        auto ct = leaf.cuts.find(c);
        if (ct == leaf.cuts.end()) return nullptr;
        return unfold(ct->second, prog.types);
    };
    switch (p->kind) {
    case ProcKind::Idle:
        return std::nullopt;
    case ProcKind::Done:
        return p->chan == x ? std::optional(Usage::Done) : std::nullopt;
    case ProcKind::In:
        if (p->chan == x) return Usage::In;
        if (p->binder == x) return std::nullopt;
        if (TypePtr h = view(p->chan); h && (h->kind == TypeKind::In || h->kind == TypeKind::Out)) {
            if (h->payload.is_session()) env[p->binder] = h->payload.session;
            env[p->chan] = h->cont;
        }
        return first_usage(p->cont, x, leaf, prog, std::move(env));
    case ProcKind::Out: {
        if (p->chan == x) return Usage::Out;
        TypePtr h = view(p->chan);
        if (p->msg.kind == Message::Kind::Name && p->msg.name == x) {
            if (h && (h->kind == TypeKind::In || h->kind == TypeKind::Out) &&
                h->payload.is_session())
                return usage_of_head(h->payload.session, prog.types);
            return std::nullopt;
        }
        if (h && (h->kind == TypeKind::In || h->kind == TypeKind::Out)) env[p->chan] = h->cont;
        return first_usage(p->cont, x, leaf, prog, std::move(env));
    }
    case ProcKind::Case: {
        if (p->chan == x) return Usage::Case;
        TypePtr h = view(p->chan);
        std::map<std::string, TypePtr> envL = env, envR = std::move(env);
        if (h && (h->kind == TypeKind::Branch || h->kind == TypeKind::Choice)) {
            envL[p->chan] = h->left;
            envR[p->chan] = h->right;
        }
        if (auto a = first_usage(p->left, x, leaf, prog, std::move(envL))) return a;
        return first_usage(p->right, x, leaf, prog, std::move(envR));
    }
    case ProcKind::SelLeft:
    case ProcKind::SelRight: {
        bool left = p->kind == ProcKind::SelLeft;
        if (p->chan == x) return Usage::Sel;
        if (TypePtr h = view(p->chan);
            h && (h->kind == TypeKind::Branch || h->kind == TypeKind::Choice))
            env[p->chan] = left ? h->left : h->right;
        return first_usage(p->cont, x, leaf, prog, std::move(env));
    }
    case ProcKind::Choice:
        if (auto a = first_usage(p->left, x, leaf, prog, env)) return a;
        return first_usage(p->right, x, leaf, prog, std::move(env));
    case ProcKind::Par:
        if (p->cut_name == x) return std::nullopt;
        env[p->cut_name] = p->cut_type;
        if (auto a = first_usage(p->left, x, leaf, prog, env)) return a;
        return first_usage(p->right, x, leaf, prog, std::move(env));
    case ProcKind::New:
        if (p->chan == x) return std::nullopt;
        env.erase(p->chan);
        return first_usage(p->cont, x, leaf, prog, std::move(env));
    case ProcKind::Call: {
        const ProcDef& def = prog.defs.at(p->callee);
        for (std::size_t i = 0; i < p->args.size(); ++i) {
            if (p->args[i].kind != Message::Kind::Name || p->args[i].name != x) continue;
            const ValueType& declared = def.params[i].second;
            if (!declared.is_session()) return std::nullopt;
            return usage_of_head(declared.session, prog.types);
        }
        return std::nullopt;
    }
    }
    return std::nullopt;
}

struct Edge {
    std::string cut;
    std::size_t a, b;
};

struct LeafRenderer {
    const Leaf& leaf;
    const Program& prog;

    ProcPtr render() {
        if (leaf.procs.empty()) return make_idle();

        // Sessions with live endpoints connect components; completed sessions
        // become free-floating obligations joined in afterwards.
        std::vector<Edge> edges;
        std::vector<std::string> spent;
        for (const auto& [x, ann] : leaf.cuts) {
            std::vector<std::size_t> owners;
            for (std::size_t i = 0; i < leaf.procs.size(); ++i)
                if (free_names(leaf.procs[i]).count(x)) owners.push_back(i);
            if (owners.size() == 2)
                edges.push_back({x, owners[0], owners[1]});
            else if (owners.empty())
                spent.push_back(x);
            else
                throw std::logic_error("session " + x + " has a single live endpoint");
        }

        // Connected groups of the session graph, ordered by smallest member.
        std::vector<std::vector<std::size_t>> groups;
        std::vector<bool> seen(leaf.procs.size(), false);
        for (std::size_t i = 0; i < leaf.procs.size(); ++i) {
            if (seen[i]) continue;
            std::vector<std::size_t> group{i};
            seen[i] = true;
            for (std::size_t w = 0; w < group.size(); ++w) {
                for (const auto& e : edges) {
                    std::size_t other;
                    if (e.a == group[w]) other = e.b;
                    else if (e.b == group[w]) other = e.a;
                    else continue;
                    if (!seen[other]) {
                        seen[other] = true;
                        group.push_back(other);
                    }
                }
            }
            std::sort(group.begin(), group.end());
            groups.push_back(std::move(group));
        }

        std::vector<ProcPtr> rendered;
        rendered.reserve(groups.size());
        for (const auto& g : groups) rendered.push_back(render_group(g, edges));

        // Join the groups with the completed sessions' cuts; any left over
        // wrap the result against an idle component.
        std::sort(spent.begin(), spent.end());
        ProcPtr acc = rendered.back();
        for (std::size_t gi = rendered.size() - 1; gi-- > 0;) {
            if (spent.empty())
                throw std::logic_error("disconnected components with no completed session to join on");
            std::string x = spent.front();
            spent.erase(spent.begin());
            acc = make_par(rendered[gi], x, leaf.cuts.at(x), acc);
        }
        for (const auto& x : spent) acc = make_par(acc, x, leaf.cuts.at(x), make_idle());
        return acc;
    }

    ProcPtr render_group(const std::vector<std::size_t>& members, const std::vector<Edge>& edges) {
        if (members.size() == 1) return leaf.procs[members[0]];
        // Pick the smallest-named edge within the group and split at it.
        const Edge* pick = nullptr;
        for (const auto& e : edges) {
            if (std::find(members.begin(), members.end(), e.a) == members.end()) continue;
            if (std::find(members.begin(), members.end(), e.b) == members.end()) continue;
            if (!pick || e.cut < pick->cut) pick = &e;
        }
        if (!pick) throw std::logic_error("connected group without an internal edge");

        // Components reachable from pick->a without crossing the picked edge.
        std::set<std::size_t> sideA{pick->a};
        for (bool changed = true; changed;) {
            changed = false;
            for (const auto& e : edges) {
                if (e.cut == pick->cut && ((e.a == pick->a && e.b == pick->b) ||
                                           (e.a == pick->b && e.b == pick->a)))
                    continue;
                if (std::find(members.begin(), members.end(), e.a) == members.end()) continue;
                if (sideA.count(e.a) != sideA.count(e.b)) {
                    sideA.insert(e.a);
                    sideA.insert(e.b);
                    changed = true;
                }
            }
        }
        std::vector<std::size_t> left, right;
        for (std::size_t m : members)
            (sideA.count(m) ? left : right).push_back(m);

        // The annotation records the left side's view; orient by comparing
        // the owning component's next action on the session with the head.
        const TypePtr& ann = leaf.cuts.at(pick->cut);
        auto expected = usage_of_head(ann, prog.types);
        std::size_t owner_left = sideA.count(pick->a) ? pick->a : pick->b;
        auto have = first_usage(leaf.procs[owner_left], pick->cut, leaf, prog);
        bool swap_sides = expected && have && *expected != *have;
        if (swap_sides) std::swap(left, right);

        std::vector<Edge> left_edges, right_edges;
        for (const auto& e : edges) {
            if (e.cut == pick->cut) continue;
            bool inL = std::find(left.begin(), left.end(), e.a) != left.end() &&
                       std::find(left.begin(), left.end(), e.b) != left.end();
            bool inR = std::find(right.begin(), right.end(), e.a) != right.end() &&
                       std::find(right.begin(), right.end(), e.b) != right.end();
            if (inL) left_edges.push_back(e);
            if (inR) right_edges.push_back(e);
        }
        return make_par(render_group(left, left_edges), pick->cut, ann,
                        render_group(right, right_edges));
    }
};

ProcPtr render_tree(const RunNodePtr& node, const Program& prog) {
    if (!node->is_leaf)
        return make_pchoice(node->prob, render_tree(node->left, prog),
                            render_tree(node->right, prog));
    return LeafRenderer{node->leaf, prog}.render();
}

} // namespace

ProcPtr render_state(const RunState& s) {
    ProcPtr body = render_tree(s.root, *s.prog);
    for (auto it = s.restrictions.rbegin(); it != s.restrictions.rend(); ++it)
        body = make_new(*it, body);
    return body;
}

std::vector<TraceRow> bounded_run(const ProcPtr& main, const Program& prog,
                                  const std::string& session, int rounds) {
    std::vector<TraceRow> trace;
    RunState state = normalize(main, prog);
    trace.push_back({0, terminated_weight(state), success_measure(state, session)});
    for (int r = 1; r <= rounds; ++r) {
        state = step_round(state);
        trace.push_back({r, terminated_weight(state), success_measure(state, session)});
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Monte-Carlo sampling semantics

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

struct Sampler {
    std::mt19937_64 rng;

    explicit Sampler(std::uint64_t seed) : rng(seed) {}

    // One 64-bit draw compared exactly against p * 2^64; exact at the
    // endpoints, so probability 1 always takes the left branch.
    bool take_left(const Probability& p) {
        if (p.is_one()) return true;
        if (p.is_zero()) return false;
        mpz_class threshold = (p.value().num() << 64) / p.value().den();
        std::uint64_t draw = rng();
        mpz_class u = mpz_class(static_cast<unsigned long>(draw >> 32));
        u <<= 32;
        u |= mpz_class(static_cast<unsigned long>(draw & 0xffffffffull));
        return u < threshold;
    }
};

struct McRun {
    const Program& prog;
    NameSupply names;
    Sampler sampler;
    std::vector<ProcPtr> comps;

    McRun(const Program& prog, std::uint64_t seed) : prog(prog), sampler(seed) {}

    void flatten(const ProcPtr& p) {
        switch (p->kind) {
        case ProcKind::Choice:
            flatten(sampler.take_left(p->prob) ? p->left : p->right);
            return;
        case ProcKind::Par:
            flatten(p->left);
            flatten(p->right);
            return;
        case ProcKind::New: {
            std::string fresh = names.fresh(p->chan);
            flatten(substitute(p->cont, p->chan, Message::make_name(fresh)));
            return;
        }
        default:
            comps.push_back(p);
            return;
        }
    }

    bool succeeded(const std::string& session) const {
        return std::any_of(comps.begin(), comps.end(), [&](const ProcPtr& p) {
            return p->kind == ProcKind::Done && p->chan == session;
        });
    }

    // One scheduling round; false when no progress is possible.
    bool round() {
        bool progressed = false;
        std::vector<ProcPtr> current = std::move(comps);
        comps.clear();
        for (const auto& p : current) {
            if (p->kind == ProcKind::Call) {
                flatten(instantiate(prog.defs.at(p->callee), p->args, names));
                progressed = true;
            } else {
                comps.push_back(p);
            }
        }
        Leaf view{comps, {}, 0};
        auto redex = find_redex(view);
        if (!redex) return progressed;
        std::vector<ProcPtr> next = comps;
        const ProcPtr& active = next[redex->first];
        const ProcPtr& passive = next[redex->second];
        ProcPtr ra, rb;
        switch (redex->kind) {
        case Redex::Kind::Com:
            ra = active->cont;
            rb = substitute(passive->cont, passive->binder, active->msg);
            break;
        case Redex::Kind::Left:
            ra = active->cont;
            rb = passive->left;
            break;
        case Redex::Kind::Right:
            ra = active->cont;
            rb = passive->right;
            break;
        }
        comps.clear();
        for (std::size_t i = 0; i < next.size(); ++i) {
            if (i == redex->first) flatten(ra);
            else if (i == redex->second) flatten(rb);
            else comps.push_back(next[i]);
        }
        return true;
    }
};

} // namespace

McResult monte_carlo(const ProcPtr& main, const Program& prog, const std::string& session,
                     long long samples, long long max_steps, std::uint64_t seed) {
    McResult result;
    result.samples = samples;
    std::set<std::string> reserved;
    for (const auto& name : prog.def_order) {
        const ProcDef& d = prog.defs.at(name);
        collect_names(d.body, reserved);
        for (const auto& [pn, pt] : d.params) reserved.insert(pn);
    }
    collect_names(main, reserved);

    for (long long k = 0; k < samples; ++k) {
        McRun run(prog, splitmix64(seed + static_cast<std::uint64_t>(k)));
        for (const auto& n : reserved) run.names.reserve(n);
        run.flatten(freshen_binders(main, run.names));
        bool ok = run.succeeded(session);
        for (long long step = 0; step < max_steps && !ok; ++step) {
            if (!run.round()) break;
            ok = run.succeeded(session);
        }
        if (ok) ++result.successes;
    }
    result.estimate =
        samples == 0 ? 0.0 : static_cast<double>(result.successes) / static_cast<double>(samples);
    return result;
}

} // namespace psc
