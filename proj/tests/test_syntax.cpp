#include "psc/parser.hpp"
#include "psc/printer.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace psc;

namespace {

std::string fixture(const std::string& name) {
    std::ifstream in(std::string(PSC_FIXTURE_DIR) + "/" + name);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("parsing the auction buyer type") {
    Program prog = parse_program("type T = !int.(&[1/4]{done; ?int.(+[2/3]{end; T})})");
    const TypePtr& t = prog.types.body("T");
    REQUIRE(t->kind == TypeKind::Out);
    CHECK(t->payload.is_base());
    CHECK(t->payload.base == BaseType::Int);
    REQUIRE(t->cont->kind == TypeKind::Branch);
    CHECK(t->cont->prob == Probability(Rational(1, 4)));
    CHECK(t->cont->left->kind == TypeKind::EndSucc);
    const TypePtr& in = t->cont->right;
    REQUIRE(in->kind == TypeKind::In);
    REQUIRE(in->cont->kind == TypeKind::Choice);
    CHECK(in->cont->prob == Probability(Rational(2, 3)));
    CHECK(in->cont->left->kind == TypeKind::EndFail);
    CHECK(in->cont->right->kind == TypeKind::Ref);
    CHECK(in->cont->right->name == "T");
}

TEST_CASE("parsing a diverging definition") {
    Program prog = parse_program("def O() = O()\nmain = O()");
    REQUIRE(prog.defs.count("O"));
    CHECK(prog.defs.at("O").params.empty());
    CHECK(prog.defs.at("O").body->kind == ProcKind::Call);
    REQUIRE(prog.main);
    CHECK(prog.main->kind == ProcKind::Call);
    CHECK(prog.main->callee == "O");
}

TEST_CASE("probability literals outside the unit interval are rejected") {
    CHECK_THROWS_AS(parse_program("main = x.left.idle +[1.5] idle"), ParseError);
    CHECK_THROWS_AS(parse_program("type T = +[5/4]{end; end}"), ParseError);
    CHECK_THROWS_AS(parse_program("type T = &[2]{end; end}"), ParseError);
}

TEST_CASE("prefixes bind tighter than choices, parallel binds loosest") {
    Program prog = parse_program("main = x!1.done y +[1/2] x.right.idle");
    REQUIRE(prog.main->kind == ProcKind::Choice);
    const ProcPtr& l = prog.main->left;
    REQUIRE(l->kind == ProcKind::Out);
    CHECK(l->cont->kind == ProcKind::Done);
    CHECK(prog.main->right->kind == ProcKind::SelRight);

    Program par = parse_program("main = idle +[1/2] idle |[x: end]| idle");
    CHECK(par.main->kind == ProcKind::Par);
    CHECK(par.main->left->kind == ProcKind::Choice);

    Program nested = parse_program("main = idle |[x: end]| idle |[y: end]| idle");
    REQUIRE(nested.main->kind == ProcKind::Par);
    CHECK(nested.main->cut_name == "x");
    REQUIRE(nested.main->right->kind == ProcKind::Par);
    CHECK(nested.main->right->cut_name == "y");
}

TEST_CASE("syntax errors carry a position") {
    try {
        parse_program("type T = !int.\n  +[1/2{end; end}");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
        CHECK(std::string(e.what()).find("2:") != std::string::npos);
    }
}

TEST_CASE("unknown names and arity mismatches are rejected") {
    CHECK_THROWS_AS(parse_program("type T = !int.U"), ParseError);
    CHECK_THROWS_AS(parse_program("main = P(x)"), ParseError);
    CHECK_THROWS_AS(parse_program("def P(x: int) = idle\nmain = P(x, y)"), ParseError);
    CHECK_THROWS_AS(parse_program("type A = B\ntype B = A"), ParseError);
    CHECK_THROWS_AS(parse_program("def D(x: int, x: int) = idle"), ParseError);
}

TEST_CASE("shadowing binders are rejected") {
    CHECK_THROWS_AS(parse_program("def D(x: int) = y?(z).z?(z).idle"), ParseError);
    CHECK_THROWS_AS(parse_program("def D(x: int) = y?(x).idle"), ParseError);
    CHECK_THROWS_AS(parse_program("main = new x {new x {idle}}"), ParseError);
}

TEST_CASE("free names") {
    CHECK(free_names(make_done("x")) == std::set<std::string>{"x"});
    CHECK(free_names(make_new("x", make_out("x", Message::make_name("y"), make_idle()))) ==
          std::set<std::string>{"y"});
    Program prog = parse_program(fixture("auction.psc"));
    CHECK(free_names(prog.defs.at("Buyer").body) == std::set<std::string>{"x"});
    CHECK(free_names(prog.main) == std::set<std::string>{"x"});
}

TEST_CASE("free names are alpha-invariant") {
    ProcPtr a = parse_program("main = c?(y).y!1.done z").main;
    ProcPtr b = parse_program("main = c?(w).w!1.done z").main;
    CHECK(free_names(a) == free_names(b));
}

TEST_CASE("rendering atoms") {
    CHECK(render_process(make_idle()) == "idle");
    CHECK(render_process(make_pchoice(Probability(Rational(1, 4)), make_done("x"), make_idle())) ==
          "done x +[1/4] idle");
}

TEST_CASE("fixtures round-trip through render and parse") {
    for (const char* name :
         {"auction.psc", "worksharing.psc", "typing_choices_1.psc", "typing_choices_2.psc",
          "typing_choices_3_good.psc", "omega.psc", "geometric.psc"}) {
        CAPTURE(name);
        Program prog = parse_program(fixture(name));
        std::string text = render_program(prog);
        Program again = parse_program(text);
        CHECK(render_program(again) == text);
        if (prog.main) {
            REQUIRE(again.main);
            CHECK(proc_equal(prog.main, again.main));
        }
        for (const auto& dn : prog.def_order) CHECK(proc_equal(prog.defs.at(dn).body, again.defs.at(dn).body));
    }
}

TEST_CASE("comments and whitespace are skipped") {
    Program prog = parse_program("-- leading comment\nmain = idle -- trailing\n-- done\n");
    CHECK(prog.main->kind == ProcKind::Idle);
}

TEST_CASE("messages: names, integers, unit") {
    Program prog = parse_program("main = x!().x!42.x!y.idle");
    REQUIRE(prog.main->kind == ProcKind::Out);
    CHECK(prog.main->msg.kind == Message::Kind::UnitLit);
    CHECK(prog.main->cont->msg.kind == Message::Kind::IntLit);
    CHECK(prog.main->cont->msg.value == 42);
    CHECK(prog.main->cont->cont->msg.kind == Message::Kind::Name);
    CHECK(prog.main->cont->cont->msg.name == "y");
}

TEST_CASE("substitution avoids capture through shadowing binders") {
    // (y?(w).done z){z -> w} must not capture: binder w is untouched, the
    // substituted name only replaces free z.
    ProcPtr p = parse_program("main = y?(w).done z").main;
    ProcPtr q = substitute(p, "z", Message::make_name("v"));
    CHECK(render_process(q) == "y?(w).done v");
    // binder shadows: substituting the binder name is a no-op inside
    ProcPtr r = substitute(p, "w", Message::make_name("u"));
    CHECK(render_process(r) == "y?(w).done z");
}
