#include "psc/ast.hpp"

#include <stdexcept>

namespace psc {

ValueType ValueType::make_session(TypePtr t) {
    ValueType v;
    v.kind = Kind::Session;
    v.session = std::move(t);
    return v;
}

ValueType ValueType::make_completed(Probability p) {
    ValueType v;
    v.kind = Kind::Completed;
    v.completed = std::move(p);
    return v;
}

ValueType ValueType::make_base(BaseType b) {
    ValueType v;
    v.kind = Kind::Base;
    v.base = b;
    return v;
}

namespace {
TypePtr make_node(SessionType&& n) { return std::make_shared<const SessionType>(std::move(n)); }
}

TypePtr make_end_fail() {
    static const TypePtr node = make_node({.kind = TypeKind::EndFail});
    return node;
}

TypePtr make_end_succ() {
    static const TypePtr node = make_node({.kind = TypeKind::EndSucc});
    return node;
}

TypePtr make_in(ValueType payload, TypePtr cont) {
    SessionType n{.kind = TypeKind::In};
    n.payload = std::move(payload);
    n.cont = std::move(cont);
    return make_node(std::move(n));
}

TypePtr make_out(ValueType payload, TypePtr cont) {
    SessionType n{.kind = TypeKind::Out};
    n.payload = std::move(payload);
    n.cont = std::move(cont);
    return make_node(std::move(n));
}

TypePtr make_branch(Probability p, TypePtr left, TypePtr right) {
    SessionType n{.kind = TypeKind::Branch};
    n.prob = std::move(p);
    n.left = std::move(left);
    n.right = std::move(right);
    return make_node(std::move(n));
}

TypePtr make_choice(Probability p, TypePtr left, TypePtr right) {
    SessionType n{.kind = TypeKind::Choice};
    n.prob = std::move(p);
    n.left = std::move(left);
    n.right = std::move(right);
    return make_node(std::move(n));
}

TypePtr make_ref(std::string name) {
    SessionType n{.kind = TypeKind::Ref};
    n.name = std::move(name);
    return make_node(std::move(n));
}

namespace {

// Structural dual; references are renamed via the name mapping.
TypePtr dual_tree(const TypePtr& t, const std::map<std::string, std::string>& dual_names) {
    switch (t->kind) {
    case TypeKind::EndFail:
    case TypeKind::EndSucc:
        return t;
    case TypeKind::In:
        return make_out(t->payload, dual_tree(t->cont, dual_names));
    case TypeKind::Out:
        return make_in(t->payload, dual_tree(t->cont, dual_names));
    case TypeKind::Branch:
        return make_choice(t->prob, dual_tree(t->left, dual_names), dual_tree(t->right, dual_names));
    case TypeKind::Choice:
        return make_branch(t->prob, dual_tree(t->left, dual_names), dual_tree(t->right, dual_names));
    case TypeKind::Ref:
        return make_ref(dual_names.at(t->name));
    }
    throw std::logic_error("unreachable");
}

void check_refs_resolve(const TypePtr& t, const std::map<std::string, TypePtr>& entries) {
    switch (t->kind) {
    case TypeKind::EndFail:
    case TypeKind::EndSucc:
        return;
    case TypeKind::In:
    case TypeKind::Out:
        if (t->payload.is_session()) check_refs_resolve(t->payload.session, entries);
        check_refs_resolve(t->cont, entries);
        return;
    case TypeKind::Branch:
    case TypeKind::Choice:
        check_refs_resolve(t->left, entries);
        check_refs_resolve(t->right, entries);
        return;
    case TypeKind::Ref:
        if (!entries.count(t->name))
            throw std::invalid_argument("unknown type name: " + t->name);
        return;
    }
}

} // namespace

TypeTable TypeTable::build(const std::vector<std::pair<std::string, TypePtr>>& defs) {
    TypeTable table;
    for (const auto& [name, body] : defs) {
        if (table.entries_.count(name))
            throw std::invalid_argument("duplicate type definition: " + name);
        table.entries_[name] = body;
        table.user_.insert(name);
        table.order_.push_back(name);
    }
    for (const auto& [name, body] : defs) check_refs_resolve(body, table.entries_);

    // Contractivity: chains of bare references must reach a constructor.
    for (const auto& [name, body] : defs) {
        std::set<std::string> seen{name};
        TypePtr cur = body;
        while (cur->kind == TypeKind::Ref) {
            if (!seen.insert(cur->name).second)
                throw std::invalid_argument("non-contractive type definition: " + name);
            cur = table.entries_.at(cur->name);
        }
    }

    // Generate a dual entry per user entry; duality is an involution, so the
    // generated entries map back to the originals.
    std::map<std::string, std::string> dual_names;
    for (const auto& [name, body] : defs) {
        std::string dn = "~" + name;
        dual_names[name] = dn;
        dual_names[dn] = name;
    }
    for (const auto& [name, body] : defs) {
        table.entries_[dual_names.at(name)] = dual_tree(body, dual_names);
    }
    table.dual_ = std::move(dual_names);
    return table;
}

const TypePtr& TypeTable::body(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::invalid_argument("unknown type name: " + name);
    return it->second;
}

const std::string& TypeTable::dual_name(const std::string& name) const {
    auto it = dual_.find(name);
    if (it == dual_.end()) throw std::invalid_argument("unknown type name: " + name);
    return it->second;
}

// ---------------------------------------------------------------------------
// Processes

Message Message::make_name(std::string n) {
    Message m;
    m.kind = Kind::Name;
    m.name = std::move(n);
    return m;
}

Message Message::make_int(mpz_class v) {
    Message m;
    m.kind = Kind::IntLit;
    m.value = std::move(v);
    return m;
}

Message Message::make_unit() {
    Message m;
    m.kind = Kind::UnitLit;
    return m;
}

std::string Message::str() const {
    switch (kind) {
    case Kind::Name: return name;
    case Kind::IntLit: return value.get_str();
    case Kind::UnitLit: return "()";
    }
    return "()";
}

bool operator==(const Message& a, const Message& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
    case Message::Kind::Name: return a.name == b.name;
    case Message::Kind::IntLit: return a.value == b.value;
    case Message::Kind::UnitLit: return true;
    }
    return false;
}

namespace {
ProcPtr make_proc(Process&& p) { return std::make_shared<const Process>(std::move(p)); }
}

ProcPtr make_idle() {
    static const ProcPtr node = make_proc({.kind = ProcKind::Idle});
    return node;
}

ProcPtr make_done(std::string chan) {
    Process p{.kind = ProcKind::Done};
    p.chan = std::move(chan);
    return make_proc(std::move(p));
}

ProcPtr make_in(std::string chan, std::string binder, ProcPtr cont) {
    Process p{.kind = ProcKind::In};
    p.chan = std::move(chan);
    p.binder = std::move(binder);
    p.cont = std::move(cont);
    return make_proc(std::move(p));
}

ProcPtr make_out(std::string chan, Message msg, ProcPtr cont) {
    Process p{.kind = ProcKind::Out};
    p.chan = std::move(chan);
    p.msg = std::move(msg);
    p.cont = std::move(cont);
    return make_proc(std::move(p));
}

ProcPtr make_case(std::string chan, ProcPtr left, ProcPtr right) {
    Process p{.kind = ProcKind::Case};
    p.chan = std::move(chan);
    p.left = std::move(left);
    p.right = std::move(right);
    return make_proc(std::move(p));
}

ProcPtr make_sel_left(std::string chan, ProcPtr cont) {
    Process p{.kind = ProcKind::SelLeft};
    p.chan = std::move(chan);
    p.cont = std::move(cont);
    return make_proc(std::move(p));
}

ProcPtr make_sel_right(std::string chan, ProcPtr cont) {
    Process p{.kind = ProcKind::SelRight};
    p.chan = std::move(chan);
    p.cont = std::move(cont);
    return make_proc(std::move(p));
}

ProcPtr make_par(ProcPtr left, std::string cut, TypePtr cut_type, ProcPtr right) {
    Process p{.kind = ProcKind::Par};
    p.left = std::move(left);
    p.cut_name = std::move(cut);
    p.cut_type = std::move(cut_type);
    p.right = std::move(right);
    return make_proc(std::move(p));
}

ProcPtr make_new(std::string chan, ProcPtr body) {
    Process p{.kind = ProcKind::New};
    p.chan = std::move(chan);
    p.cont = std::move(body);
    return make_proc(std::move(p));
}

ProcPtr make_pchoice(Probability prob, ProcPtr left, ProcPtr right) {
    Process p{.kind = ProcKind::Choice};
    p.prob = std::move(prob);
    p.left = std::move(left);
    p.right = std::move(right);
    return make_proc(std::move(p));
}

ProcPtr make_call(std::string callee, std::vector<Message> args) {
    Process p{.kind = ProcKind::Call};
    p.callee = std::move(callee);
    p.args = std::move(args);
    return make_proc(std::move(p));
}

namespace {

void free_names_into(const ProcPtr& p, std::set<std::string>& bound, std::set<std::string>& out,
                     bool include_cuts) {
    switch (p->kind) {
    case ProcKind::Idle:
        return;
    case ProcKind::Done:
        if (!bound.count(p->chan)) out.insert(p->chan);
        return;
    case ProcKind::In: {
        if (!bound.count(p->chan)) out.insert(p->chan);
        bool inserted = bound.insert(p->binder).second;
        free_names_into(p->cont, bound, out, include_cuts);
        if (inserted) bound.erase(p->binder);
        return;
    }
    case ProcKind::Out:
        if (!bound.count(p->chan)) out.insert(p->chan);
        if (p->msg.kind == Message::Kind::Name && !bound.count(p->msg.name)) out.insert(p->msg.name);
        free_names_into(p->cont, bound, out, include_cuts);
        return;
    case ProcKind::Case:
        if (!bound.count(p->chan)) out.insert(p->chan);
        free_names_into(p->left, bound, out, include_cuts);
        free_names_into(p->right, bound, out, include_cuts);
        return;
    case ProcKind::SelLeft:
    case ProcKind::SelRight:
        if (!bound.count(p->chan)) out.insert(p->chan);
        free_names_into(p->cont, bound, out, include_cuts);
        return;
    case ProcKind::Par:
        if (include_cuts && !bound.count(p->cut_name)) out.insert(p->cut_name);
        free_names_into(p->left, bound, out, include_cuts);
        free_names_into(p->right, bound, out, include_cuts);
        return;
    case ProcKind::New: {
        bool inserted = bound.insert(p->chan).second;
        free_names_into(p->cont, bound, out, include_cuts);
        if (inserted) bound.erase(p->chan);
        return;
    }
    case ProcKind::Choice:
        free_names_into(p->left, bound, out, include_cuts);
        free_names_into(p->right, bound, out, include_cuts);
        return;
    case ProcKind::Call:
        for (const auto& a : p->args)
            if (a.kind == Message::Kind::Name && !bound.count(a.name)) out.insert(a.name);
        return;
    }
}

} // namespace

std::set<std::string> free_names(const ProcPtr& p) {
    std::set<std::string> bound, out;
    free_names_into(p, bound, out, false);
    return out;
}

std::set<std::string> needed_names(const ProcPtr& p) {
    std::set<std::string> bound, out;
    free_names_into(p, bound, out, true);
    return out;
}

void collect_names(const ProcPtr& p, std::set<std::string>& out) {
    switch (p->kind) {
    case ProcKind::Idle:
        return;
    case ProcKind::Done:
        out.insert(p->chan);
        return;
    case ProcKind::In:
        out.insert(p->chan);
        out.insert(p->binder);
        collect_names(p->cont, out);
        return;
    case ProcKind::Out:
        out.insert(p->chan);
        if (p->msg.kind == Message::Kind::Name) out.insert(p->msg.name);
        collect_names(p->cont, out);
        return;
    case ProcKind::Case:
        out.insert(p->chan);
        collect_names(p->left, out);
        collect_names(p->right, out);
        return;
    case ProcKind::SelLeft:
    case ProcKind::SelRight:
        out.insert(p->chan);
        collect_names(p->cont, out);
        return;
    case ProcKind::Par:
        out.insert(p->cut_name);
        collect_names(p->left, out);
        collect_names(p->right, out);
        return;
    case ProcKind::New:
        out.insert(p->chan);
        collect_names(p->cont, out);
        return;
    case ProcKind::Choice:
        collect_names(p->left, out);
        collect_names(p->right, out);
        return;
    case ProcKind::Call:
        for (const auto& a : p->args)
            if (a.kind == Message::Kind::Name) out.insert(a.name);
        return;
    }
}

ProcPtr substitute(const ProcPtr& p, const std::string& name, const Message& replacement) {
    auto sub_chan = [&](const std::string& c) -> std::string {
        if (c != name) return c;
        if (replacement.kind != Message::Kind::Name)
            throw std::logic_error("cannot substitute a literal for channel " + c);
        return replacement.name;
    };
    switch (p->kind) {
    case ProcKind::Idle:
        return p;
    case ProcKind::Done:
        return p->chan == name ? make_done(sub_chan(p->chan)) : p;
    case ProcKind::In:
        if (p->binder == name) return p; // shadowed
        return make_in(sub_chan(p->chan), p->binder, substitute(p->cont, name, replacement));
    case ProcKind::Out: {
        Message m = p->msg;
        if (m.kind == Message::Kind::Name && m.name == name) m = replacement;
        return make_out(sub_chan(p->chan), std::move(m), substitute(p->cont, name, replacement));
    }
    case ProcKind::Case:
        return make_case(sub_chan(p->chan), substitute(p->left, name, replacement),
                         substitute(p->right, name, replacement));
    case ProcKind::SelLeft:
        return make_sel_left(sub_chan(p->chan), substitute(p->cont, name, replacement));
    case ProcKind::SelRight:
        return make_sel_right(sub_chan(p->chan), substitute(p->cont, name, replacement));
    case ProcKind::Par:
        return make_par(substitute(p->left, name, replacement), sub_chan(p->cut_name), p->cut_type,
                        substitute(p->right, name, replacement));
    case ProcKind::New:
        if (p->chan == name) return p; // shadowed
        return make_new(p->chan, substitute(p->cont, name, replacement));
    case ProcKind::Choice:
        return make_pchoice(p->prob, substitute(p->left, name, replacement),
                            substitute(p->right, name, replacement));
    case ProcKind::Call: {
        std::vector<Message> args;
        args.reserve(p->args.size());
        for (const auto& a : p->args) {
            if (a.kind == Message::Kind::Name && a.name == name) args.push_back(replacement);
            else args.push_back(a);
        }
        return make_call(p->callee, std::move(args));
    }
    }
    throw std::logic_error("unreachable");
}

namespace {

bool type_tree_equal(const TypePtr& a, const TypePtr& b) {
    if (a == b) return true;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
    case TypeKind::EndFail:
    case TypeKind::EndSucc:
        return true;
    case TypeKind::In:
    case TypeKind::Out: {
        const ValueType& pa = a->payload;
        const ValueType& pb = b->payload;
        if (pa.kind != pb.kind) return false;
        if (pa.is_session() && !type_tree_equal(pa.session, pb.session)) return false;
        if (pa.is_completed() && pa.completed != pb.completed) return false;
        if (pa.is_base() && pa.base != pb.base) return false;
        return type_tree_equal(a->cont, b->cont);
    }
    case TypeKind::Branch:
    case TypeKind::Choice:
        return a->prob == b->prob && type_tree_equal(a->left, b->left) &&
               type_tree_equal(a->right, b->right);
    case TypeKind::Ref:
        return a->name == b->name;
    }
    return false;
}

} // namespace

bool proc_equal(const ProcPtr& a, const ProcPtr& b) {
    if (a == b) return true;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
    case ProcKind::Idle:
        return true;
    case ProcKind::Done:
        return a->chan == b->chan;
    case ProcKind::In:
        return a->chan == b->chan && a->binder == b->binder && proc_equal(a->cont, b->cont);
    case ProcKind::Out:
        return a->chan == b->chan && a->msg == b->msg && proc_equal(a->cont, b->cont);
    case ProcKind::Case:
        return a->chan == b->chan && proc_equal(a->left, b->left) && proc_equal(a->right, b->right);
    case ProcKind::SelLeft:
    case ProcKind::SelRight:
        return a->chan == b->chan && proc_equal(a->cont, b->cont);
    case ProcKind::Par:
        return a->cut_name == b->cut_name && type_tree_equal(a->cut_type, b->cut_type) &&
               proc_equal(a->left, b->left) && proc_equal(a->right, b->right);
    case ProcKind::New:
        return a->chan == b->chan && proc_equal(a->cont, b->cont);
    case ProcKind::Choice:
        return a->prob == b->prob && proc_equal(a->left, b->left) && proc_equal(a->right, b->right);
    case ProcKind::Call:
        return a->callee == b->callee && a->args == b->args;
    }
    return false;
}

} // namespace psc
