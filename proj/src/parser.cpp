#include "psc/parser.hpp"

#include <cctype>
#include <functional>
#include <optional>
#include <vector>

namespace psc {

namespace {

enum class Tok {
    KwType, KwDef, KwMain, KwEnd, KwDone, KwCase, KwNew, KwIdle, KwInt, KwUnit, KwLeft, KwRight,
    Name,   // lowercase identifier
    UName,  // uppercase identifier (type or process variable)
    Nat, Decimal,
    Eq, LParen, RParen, LBrace, RBrace, Semi, Comma, Dot, Colon, Question, Bang, Slash,
    ParL,   // |[
    ParR,   // ]|
    PlusL,  // +[
    AmpL,   // &[
    HashL,  // #[
    RBrack, // ]
    End,
};

struct Token {
    Tok kind;
    std::string text;
    int line, col;
};

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip_space();
            if (pos_ >= text_.size()) {
                out.push_back({Tok::End, "", line_, col_});
                return out;
            }
            out.push_back(next());
        }
    }

private:
    void skip_space() {
        for (;;) {
            while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
                advance();
            if (pos_ + 1 < text_.size() && text_[pos_] == '-' && text_[pos_ + 1] == '-') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
                continue;
            }
            return;
        }
    }

    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    char peek(std::size_t k = 0) const {
        return pos_ + k < text_.size() ? text_[pos_ + k] : '\0';
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line_, col_, msg); }

    Token next() {
        int line = line_, col = col_;
        char c = peek();
        auto tok = [&](Tok k, std::string t, int n) {
            for (int i = 0; i < n; ++i) advance();
            return Token{k, std::move(t), line, col};
        };
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string id;
            while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') {
                id += peek();
                advance();
            }
            static const std::map<std::string, Tok> keywords = {
                {"type", Tok::KwType}, {"def", Tok::KwDef},   {"main", Tok::KwMain},
                {"end", Tok::KwEnd},   {"done", Tok::KwDone}, {"case", Tok::KwCase},
                {"new", Tok::KwNew},   {"idle", Tok::KwIdle}, {"int", Tok::KwInt},
                {"unit", Tok::KwUnit}, {"left", Tok::KwLeft}, {"right", Tok::KwRight}};
            auto it = keywords.find(id);
            if (it != keywords.end()) return Token{it->second, id, line, col};
            if (std::isupper(static_cast<unsigned char>(id[0])))
                return Token{Tok::UName, id, line, col};
            return Token{Tok::Name, id, line, col};
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::string num;
            while (std::isdigit(static_cast<unsigned char>(peek()))) {
                num += peek();
                advance();
            }
            if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
                num += '.';
                advance();
                while (std::isdigit(static_cast<unsigned char>(peek()))) {
                    num += peek();
                    advance();
                }
                return Token{Tok::Decimal, num, line, col};
            }
            return Token{Tok::Nat, num, line, col};
        }
        switch (c) {
        case '=': return tok(Tok::Eq, "=", 1);
        case '(': return tok(Tok::LParen, "(", 1);
        case ')': return tok(Tok::RParen, ")", 1);
        case '{': return tok(Tok::LBrace, "{", 1);
        case '}': return tok(Tok::RBrace, "}", 1);
        case ';': return tok(Tok::Semi, ";", 1);
        case ',': return tok(Tok::Comma, ",", 1);
        case '.': return tok(Tok::Dot, ".", 1);
        case ':': return tok(Tok::Colon, ":", 1);
        case '?': return tok(Tok::Question, "?", 1);
        case '!': return tok(Tok::Bang, "!", 1);
        case '/': return tok(Tok::Slash, "/", 1);
        case '|':
            if (peek(1) == '[') return tok(Tok::ParL, "|[", 2);
            fail("stray '|' (expected '|[')");
        case ']':
            if (peek(1) == '|') return tok(Tok::ParR, "]|", 2);
            return tok(Tok::RBrack, "]", 1);
        case '+':
            if (peek(1) == '[') return tok(Tok::PlusL, "+[", 2);
            fail("stray '+' (expected '+[')");
        case '&':
            if (peek(1) == '[') return tok(Tok::AmpL, "&[", 2);
            fail("stray '&' (expected '&[')");
        case '#':
            if (peek(1) == '[') return tok(Tok::HashL, "#[", 2);
            fail("stray '#' (expected '#[')");
        default:
            fail(std::string("unexpected character '") + c + "'");
        }
    }

    const std::string& text_;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;
};

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    Program program() {
        std::vector<std::pair<std::string, TypePtr>> typedefs;
        std::vector<ProcDef> defs;
        ProcPtr main;
        for (;;) {
            if (at(Tok::KwType)) {
                eat();
                std::string name = expect(Tok::UName, "type name").text;
                expect(Tok::Eq, "'='");
                typedefs.emplace_back(name, stype());
            } else if (at(Tok::KwDef)) {
                defs.push_back(procdef());
            } else {
                break;
            }
        }
        if (at(Tok::KwMain)) {
            eat();
            expect(Tok::Eq, "'='");
            main = proc();
        }
        expect(Tok::End, "end of input");

        Program prog;
        try {
            prog.types = TypeTable::build(typedefs);
        } catch (const std::invalid_argument& e) {
            throw ParseError(e.what());
        }
        for (auto& d : defs) {
            if (prog.defs.count(d.name)) throw ParseError("duplicate process definition: " + d.name);
            prog.def_order.push_back(d.name);
            prog.defs[d.name] = std::move(d);
        }
        prog.main = main;
        validate(prog);
        return prog;
    }

    TypePtr single_type() {
        TypePtr t = stype();
        expect(Tok::End, "end of input");
        return t;
    }

private:
    const Token& cur() const { return toks_[idx_]; }
    bool at(Tok k) const { return cur().kind == k; }
    Token eat() { return toks_[idx_++]; }

    Token expect(Tok k, const std::string& what) {
        if (!at(k)) fail("expected " + what);
        return eat();
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(cur().line, cur().col, msg + ", found '" +
                                                    (cur().kind == Tok::End ? "<eof>" : cur().text) + "'");
    }

    Probability prob() {
        const Token& t = cur();
        Rational value;
        if (at(Tok::Decimal)) {
            value = Rational::parse(eat().text);
        } else if (at(Tok::Nat)) {
            std::string num = eat().text;
            if (at(Tok::Slash)) {
                eat();
                std::string den = expect(Tok::Nat, "denominator").text;
                if (mpz_class(den) == 0) throw ParseError(t.line, t.col, "zero denominator");
                value = Rational(mpz_class(num), mpz_class(den));
            } else {
                value = Rational::parse(num);
            }
        } else {
            fail("expected probability literal");
        }
        try {
            return Probability(value);
        } catch (const std::invalid_argument&) {
            throw ParseError(t.line, t.col, "probability literal outside [0,1]: " + value.str());
        }
    }

    TypePtr stype() {
        switch (cur().kind) {
        case Tok::KwEnd: eat(); return make_end_fail();
        case Tok::KwDone: eat(); return make_end_succ();
        case Tok::UName: return make_ref(eat().text);
        case Tok::LParen: {
            eat();
            TypePtr t = stype();
            expect(Tok::RParen, "')'");
            return t;
        }
        case Tok::Question: {
            eat();
            ValueType payload = vtype();
            expect(Tok::Dot, "'.'");
            return make_in(std::move(payload), stype());
        }
        case Tok::Bang: {
            eat();
            ValueType payload = vtype();
            expect(Tok::Dot, "'.'");
            return make_out(std::move(payload), stype());
        }
        case Tok::AmpL:
        case Tok::PlusL: {
            bool branch = cur().kind == Tok::AmpL;
            eat();
            Probability p = prob();
            expect(Tok::RBrack, "']'");
            expect(Tok::LBrace, "'{'");
            TypePtr l = stype();
            expect(Tok::Semi, "';'");
            TypePtr r = stype();
            expect(Tok::RBrace, "'}'");
            return branch ? make_branch(p, l, r) : make_choice(p, l, r);
        }
        default:
            fail("expected session type");
        }
    }

    ValueType vtype() {
        switch (cur().kind) {
        case Tok::KwInt: eat(); return ValueType::make_base(BaseType::Int);
        case Tok::KwUnit: eat(); return ValueType::make_base(BaseType::Unit);
        case Tok::HashL: {
            eat();
            Probability p = prob();
            expect(Tok::RBrack, "']'");
            return ValueType::make_completed(p);
        }
        default:
            return ValueType::make_session(stype());
        }
    }

    ProcPtr proc() { return par(); }

    ProcPtr par() {
        ProcPtr left = choice();
        if (!at(Tok::ParL)) return left;
        eat();
        std::string cut = expect(Tok::Name, "channel name").text;
        expect(Tok::Colon, "':'");
        TypePtr t = stype();
        expect(Tok::ParR, "']|'");
        return make_par(std::move(left), std::move(cut), std::move(t), par());
    }

    ProcPtr choice() {
        ProcPtr left = prefix();
        if (!at(Tok::PlusL)) return left;
        eat();
        Probability p = prob();
        expect(Tok::RBrack, "']'");
        return make_pchoice(p, std::move(left), choice());
    }

    ProcPtr prefix() {
        switch (cur().kind) {
        case Tok::KwIdle:
            eat();
            return make_idle();
        case Tok::KwDone: {
            eat();
            return make_done(expect(Tok::Name, "channel name").text);
        }
        case Tok::KwCase: {
            eat();
            std::string chan = expect(Tok::Name, "channel name").text;
            expect(Tok::LBrace, "'{'");
            ProcPtr l = proc();
            expect(Tok::Semi, "';'");
            ProcPtr r = proc();
            expect(Tok::RBrace, "'}'");
            return make_case(std::move(chan), std::move(l), std::move(r));
        }
        case Tok::KwNew: {
            eat();
            std::string chan = expect(Tok::Name, "channel name").text;
            expect(Tok::LBrace, "'{'");
            ProcPtr body = proc();
            expect(Tok::RBrace, "'}'");
            return make_new(std::move(chan), std::move(body));
        }
        case Tok::UName: {
            std::string callee = eat().text;
            expect(Tok::LParen, "'('");
            std::vector<Message> args;
            if (!at(Tok::RParen)) {
                args.push_back(message());
                while (at(Tok::Comma)) {
                    eat();
                    args.push_back(message());
                }
            }
            expect(Tok::RParen, "')'");
            return make_call(std::move(callee), std::move(args));
        }
        case Tok::LParen: {
            eat();
            ProcPtr p = proc();
            expect(Tok::RParen, "')'");
            return p;
        }
        case Tok::Name: {
            std::string chan = eat().text;
            if (at(Tok::Question)) {
                eat();
                expect(Tok::LParen, "'('");
                std::string binder = expect(Tok::Name, "binder name").text;
                expect(Tok::RParen, "')'");
                expect(Tok::Dot, "'.'");
                return make_in(std::move(chan), std::move(binder), prefix());
            }
            if (at(Tok::Bang)) {
                eat();
                Message m = message();
                expect(Tok::Dot, "'.'");
                return make_out(std::move(chan), std::move(m), prefix());
            }
            if (at(Tok::Dot)) {
                eat();
                bool leftSel;
                if (at(Tok::KwLeft)) leftSel = true;
                else if (at(Tok::KwRight)) leftSel = false;
                else fail("expected 'left' or 'right'");
                eat();
                expect(Tok::Dot, "'.'");
                return leftSel ? make_sel_left(std::move(chan), prefix())
                               : make_sel_right(std::move(chan), prefix());
            }
            fail("expected '?', '!' or '.' after channel name");
        }
        default:
            fail("expected process");
        }
    }

    Message message() {
        switch (cur().kind) {
        case Tok::Name: return Message::make_name(eat().text);
        case Tok::Nat: return Message::make_int(mpz_class(eat().text));
        case Tok::LParen: {
            eat();
            expect(Tok::RParen, "')'");
            return Message::make_unit();
        }
        default:
            fail("expected message (name, integer or '()')");
        }
    }

    // -- post-parse validation ------------------------------------------------

    void check_type_refs(const TypePtr& t, const TypeTable& table) {
        switch (t->kind) {
        case TypeKind::EndFail:
        case TypeKind::EndSucc:
            return;
        case TypeKind::In:
        case TypeKind::Out:
            if (t->payload.is_session()) check_type_refs(t->payload.session, table);
            check_type_refs(t->cont, table);
            return;
        case TypeKind::Branch:
        case TypeKind::Choice:
            check_type_refs(t->left, table);
            check_type_refs(t->right, table);
            return;
        case TypeKind::Ref:
            if (!table.contains(t->name)) throw ParseError("unknown type name: " + t->name);
            return;
        }
    }

    void check_process(const ProcPtr& p, const Program& prog, std::set<std::string>& bound) {
        switch (p->kind) {
        case ProcKind::Idle:
        case ProcKind::Done:
            return;
        case ProcKind::In: {
            if (bound.count(p->binder))
                throw ParseError("binder '" + p->binder + "' shadows an enclosing binding");
            bound.insert(p->binder);
            check_process(p->cont, prog, bound);
            bound.erase(p->binder);
            return;
        }
        case ProcKind::Out:
        case ProcKind::SelLeft:
        case ProcKind::SelRight:
            check_process(p->cont, prog, bound);
            return;
        case ProcKind::Case:
        case ProcKind::Choice:
            check_process(p->left, prog, bound);
            check_process(p->right, prog, bound);
            return;
        case ProcKind::Par:
            check_type_refs(p->cut_type, prog.types);
            check_process(p->left, prog, bound);
            check_process(p->right, prog, bound);
            return;
        case ProcKind::New: {
            if (bound.count(p->chan))
                throw ParseError("binder '" + p->chan + "' shadows an enclosing binding");
            bound.insert(p->chan);
            check_process(p->cont, prog, bound);
            bound.erase(p->chan);
            return;
        }
        case ProcKind::Call: {
            auto it = prog.defs.find(p->callee);
            if (it == prog.defs.end())
                throw ParseError("call to undefined process: " + p->callee);
            if (it->second.params.size() != p->args.size())
                throw ParseError("arity mismatch: " + p->callee + " expects " +
                                 std::to_string(it->second.params.size()) + " arguments, got " +
                                 std::to_string(p->args.size()));
            return;
        }
        }
    }

    void validate(const Program& prog) {
        for (const auto& name : prog.def_order) {
            const ProcDef& d = prog.defs.at(name);
            std::set<std::string> bound;
            for (const auto& [pname, ptype] : d.params) {
                if (!bound.insert(pname).second)
                    throw ParseError("duplicate parameter '" + pname + "' in " + name);
                if (ptype.is_session()) check_type_refs(ptype.session, prog.types);
            }
            check_process(d.body, prog, bound);
        }
        if (prog.main) {
            std::set<std::string> bound;
            check_process(prog.main, prog, bound);
        }
    }

    ProcDef procdef() {
        eat(); // def
        ProcDef d;
        d.name = expect(Tok::UName, "process name").text;
        expect(Tok::LParen, "'('");
        if (!at(Tok::RParen)) {
            for (;;) {
                std::string pname = expect(Tok::Name, "parameter name").text;
                expect(Tok::Colon, "':'");
                d.params.emplace_back(std::move(pname), vtype());
                if (!at(Tok::Comma)) break;
                eat();
            }
        }
        expect(Tok::RParen, "')'");
        expect(Tok::Eq, "'='");
        d.body = proc();
        return d;
    }

    std::vector<Token> toks_;
    std::size_t idx_ = 0;
};

} // namespace

Program parse_program(const std::string& text) {
    Parser parser(Lexer(text).run());
    return parser.program();
}

TypePtr parse_type(const std::string& text) {
    Parser parser(Lexer(text).run());
    return parser.single_type();
}

} // namespace psc
