#pragma once

#include "psc/rational.hpp"

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace psc {

// ---------------------------------------------------------------------------
// Types

enum class TypeKind { EndFail, EndSucc, In, Out, Branch, Choice, Ref };
enum class BaseType { Unit, Int };

struct SessionType;
using TypePtr = std::shared_ptr<const SessionType>;

/// Value types: session endpoints, completed sessions #p, and base types.
struct ValueType {
    enum class Kind { Session, Completed, Base };
    Kind kind = Kind::Base;
    TypePtr session;       // Session
    Probability completed; // Completed
    BaseType base = BaseType::Unit;

    static ValueType make_session(TypePtr t);
    static ValueType make_completed(Probability p);
    static ValueType make_base(BaseType b);

    bool is_session() const { return kind == Kind::Session; }
    bool is_completed() const { return kind == Kind::Completed; }
    bool is_base() const { return kind == Kind::Base; }
};

/// Node of a session type tree. Recursive types are closed through named
/// references into a TypeTable; nodes are immutable and shared.
struct SessionType {
    TypeKind kind;
    ValueType payload;  // In/Out
    TypePtr cont;       // In/Out
    Probability prob;   // Branch/Choice
    TypePtr left, right; // Branch/Choice
    std::string name;   // Ref
};

TypePtr make_end_fail();
TypePtr make_end_succ();
TypePtr make_in(ValueType payload, TypePtr cont);
TypePtr make_out(ValueType payload, TypePtr cont);
TypePtr make_branch(Probability p, TypePtr left, TypePtr right);
TypePtr make_choice(Probability p, TypePtr left, TypePtr right);
TypePtr make_ref(std::string name);

/// Named session type equations. All bodies are contractive and closed with
/// respect to the table; a dual entry is generated for every user entry at
/// construction time, so the table is immutable afterwards.
class TypeTable {
public:
    TypeTable() = default;

    /// Builds the table from user definitions in declaration order.
    /// Throws std::invalid_argument on unknown references or Ref-only cycles.
    static TypeTable build(const std::vector<std::pair<std::string, TypePtr>>& defs);

    bool contains(const std::string& name) const { return entries_.count(name) != 0; }
    const TypePtr& body(const std::string& name) const;
    const std::string& dual_name(const std::string& name) const;
    bool is_user(const std::string& name) const { return user_.count(name) != 0; }
    const std::vector<std::string>& user_order() const { return order_; }

private:
    std::map<std::string, TypePtr> entries_;
    std::map<std::string, std::string> dual_;
    std::set<std::string> user_;
    std::vector<std::string> order_;
};

// ---------------------------------------------------------------------------
// Processes

enum class ProcKind { Idle, Done, In, Out, Case, SelLeft, SelRight, Par, New, Choice, Call };

struct Message {
    enum class Kind { Name, IntLit, UnitLit };
    Kind kind = Kind::UnitLit;
    std::string name;
    mpz_class value;

    static Message make_name(std::string n);
    static Message make_int(mpz_class v);
    static Message make_unit();
    std::string str() const;
    friend bool operator==(const Message& a, const Message& b);
};

struct Process;
using ProcPtr = std::shared_ptr<const Process>;

struct Process {
    ProcKind kind;
    std::string chan;    // Done/In/Out/Case/SelLeft/SelRight; binder for New
    std::string binder;  // In
    Message msg;         // Out
    ProcPtr cont;        // In/Out/SelLeft/SelRight/New
    ProcPtr left, right; // Par/Choice/Case
    std::string cut_name; // Par
    TypePtr cut_type;     // Par
    Probability prob;     // Choice
    std::string callee;        // Call
    std::vector<Message> args; // Call
};

ProcPtr make_idle();
ProcPtr make_done(std::string chan);
ProcPtr make_in(std::string chan, std::string binder, ProcPtr cont);
ProcPtr make_out(std::string chan, Message msg, ProcPtr cont);
ProcPtr make_case(std::string chan, ProcPtr left, ProcPtr right);
ProcPtr make_sel_left(std::string chan, ProcPtr cont);
ProcPtr make_sel_right(std::string chan, ProcPtr cont);
ProcPtr make_par(ProcPtr left, std::string cut, TypePtr cut_type, ProcPtr right);
ProcPtr make_new(std::string chan, ProcPtr body);
ProcPtr make_pchoice(Probability p, ProcPtr left, ProcPtr right);
ProcPtr make_call(std::string callee, std::vector<Message> args);

/// Free names; the input binder and restriction bind.
std::set<std::string> free_names(const ProcPtr& p);

/// Free names plus the cut names of parallel compositions (a cut is a
/// context demand even when neither component mentions the name), with the
/// same binder scoping as free_names.
std::set<std::string> needed_names(const ProcPtr& p);

/// All names occurring in a process, bound or free.
void collect_names(const ProcPtr& p, std::set<std::string>& out);

/// Capture-avoiding substitution of a message for a free name.
ProcPtr substitute(const ProcPtr& p, const std::string& name, const Message& replacement);

/// Structural equality of processes (exact, including annotations).
bool proc_equal(const ProcPtr& a, const ProcPtr& b);

// ---------------------------------------------------------------------------
// Programs

struct ProcDef {
    std::string name;
    std::vector<std::pair<std::string, ValueType>> params;
    ProcPtr body;
};

struct Program {
    TypeTable types;
    std::map<std::string, ProcDef> defs;
    std::vector<std::string> def_order;
    ProcPtr main; // null when absent
};

} // namespace psc
