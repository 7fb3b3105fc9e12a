#include "psc/printer.hpp"

#include <sstream>
#include <stdexcept>

namespace psc {

namespace {

std::string type_str(const TypePtr& t);

// Payloads and continuations: branch/choice forms are brace-delimited but we
// parenthesize them after '.' for readability; chained ?/! payloads are
// parenthesized to keep the text unambiguous to a human reader.
std::string payload_str(const ValueType& v) {
    switch (v.kind) {
    case ValueType::Kind::Base:
        return v.base == BaseType::Int ? "int" : "unit";
    case ValueType::Kind::Completed:
        return "#[" + v.completed.str() + "]";
    case ValueType::Kind::Session: {
        const TypePtr& s = v.session;
        if (s->kind == TypeKind::In || s->kind == TypeKind::Out ||
            s->kind == TypeKind::Branch || s->kind == TypeKind::Choice)
            return "(" + type_str(s) + ")";
        return type_str(s);
    }
    }
    throw std::logic_error("unreachable");
}

std::string cont_str(const TypePtr& t) {
    if (t->kind == TypeKind::Branch || t->kind == TypeKind::Choice)
        return "(" + type_str(t) + ")";
    return type_str(t);
}

std::string type_str(const TypePtr& t) {
    switch (t->kind) {
    case TypeKind::EndFail: return "end";
    case TypeKind::EndSucc: return "done";
    case TypeKind::In: return "?" + payload_str(t->payload) + "." + cont_str(t->cont);
    case TypeKind::Out: return "!" + payload_str(t->payload) + "." + cont_str(t->cont);
    case TypeKind::Branch:
        return "&[" + t->prob.str() + "]{" + type_str(t->left) + "; " + type_str(t->right) + "}";
    case TypeKind::Choice:
        return "+[" + t->prob.str() + "]{" + type_str(t->left) + "; " + type_str(t->right) + "}";
    case TypeKind::Ref: return t->name;
    }
    throw std::logic_error("unreachable");
}

// Precedence levels: 0 parallel, 1 probabilistic choice, 2 prefixes/atoms.
std::string proc_str(const ProcPtr& p, int min_level);

std::string at_level(const ProcPtr& p, int own, int min_level, const std::string& body) {
    if (own < min_level) return "(" + body + ")";
    return body;
}

std::string proc_str(const ProcPtr& p, int min_level) {
    switch (p->kind) {
    case ProcKind::Idle:
        return "idle";
    case ProcKind::Done:
        return "done " + p->chan;
    case ProcKind::In:
        return p->chan + "?(" + p->binder + ")." + proc_str(p->cont, 2);
    case ProcKind::Out:
        return p->chan + "!" + p->msg.str() + "." + proc_str(p->cont, 2);
    case ProcKind::Case:
        return "case " + p->chan + " {" + proc_str(p->left, 0) + "; " + proc_str(p->right, 0) + "}";
    case ProcKind::SelLeft:
        return p->chan + ".left." + proc_str(p->cont, 2);
    case ProcKind::SelRight:
        return p->chan + ".right." + proc_str(p->cont, 2);
    case ProcKind::New:
        return "new " + p->chan + " {" + proc_str(p->cont, 0) + "}";
    case ProcKind::Call: {
        std::string s = p->callee + "(";
        for (std::size_t i = 0; i < p->args.size(); ++i) {
            if (i) s += ", ";
            s += p->args[i].str();
        }
        return s + ")";
    }
    case ProcKind::Choice:
        return at_level(p, 1, min_level,
                        proc_str(p->left, 2) + " +[" + p->prob.str() + "] " + proc_str(p->right, 1));
    case ProcKind::Par:
        return at_level(p, 0, min_level,
                        proc_str(p->left, 1) + " |[" + p->cut_name + ": " +
                            type_str(p->cut_type) + "]| " + proc_str(p->right, 0));
    }
    throw std::logic_error("unreachable");
}

} // namespace

std::string render_type(const TypePtr& t) { return type_str(t); }

std::string render_value_type(const ValueType& t) { return payload_str(t); }

std::string render_process(const ProcPtr& p) { return proc_str(p, 0); }

std::string render_program(const Program& prog) {
    std::ostringstream os;
    for (const auto& name : prog.types.user_order())
        os << "type " << name << " = " << type_str(prog.types.body(name)) << "\n";
    for (const auto& name : prog.def_order) {
        const ProcDef& d = prog.defs.at(name);
        os << "def " << d.name << "(";
        for (std::size_t i = 0; i < d.params.size(); ++i) {
            if (i) os << ", ";
            os << d.params[i].first << ": " << render_value_type(d.params[i].second);
        }
        os << ") = " << proc_str(d.body, 0) << "\n";
    }
    if (prog.main) os << "main = " << proc_str(prog.main, 0) << "\n";
    return os.str();
}

} // namespace psc
