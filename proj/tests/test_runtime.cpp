#include "psc/runtime.hpp"

#include "psc/checker.hpp"
#include "psc/dtmc.hpp"
#include "psc/parser.hpp"
#include "psc/printer.hpp"
#include "psc/typeops.hpp"

#include <doctest.h>

#include <fstream>
#include <cmath>
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

Rational R(long n, long d = 1) { return Rational(n, d); }

std::vector<const Leaf*> leaves(const RunState& s) {
    std::vector<const Leaf*> out;
    collect_leaves(s.root, out);
    return out;
}

} // namespace

TEST_CASE("normalize distributes parallel over probabilistic choice") {
    Program prog = parse_program(
        "main = (x.left.idle +[1/4] x.right.idle) |[x: +[1/4]{end; end}]| case x {idle; idle}");
    RunState st = normalize(prog.main, prog);
    REQUIRE(!st.root->is_leaf);
    CHECK(st.root->prob == Probability(R(1, 4)));
    auto ls = leaves(st);
    REQUIRE(ls.size() == 2);
    CHECK(ls[0]->procs.size() == 2);
    CHECK(ls[0]->procs[0]->kind == ProcKind::SelLeft);
    CHECK(ls[1]->procs[0]->kind == ProcKind::SelRight);
    CHECK(ls[0]->procs[1]->kind == ProcKind::Case);
    // annotations sharpen to the committed selection in each branch
    CHECK(unfold(ls[0]->cuts.at("x"), prog.types)->prob == Probability(R(1)));
    CHECK(unfold(ls[1]->cuts.at("x"), prog.types)->prob == Probability(R(0)));
}

TEST_CASE("trivial choices collapse during normalization") {
    Program prog = parse_program("main = done x +[1] idle");
    RunState st = normalize(prog.main, prog);
    REQUIRE(st.root->is_leaf);
    REQUIRE(st.root->leaf.procs.size() == 1);
    CHECK(st.root->leaf.procs[0]->kind == ProcKind::Done);

    Program prog0 = parse_program("main = done x +[0] idle");
    RunState st0 = normalize(prog0.main, prog0);
    REQUIRE(st0.root->is_leaf);
    CHECK(st0.root->leaf.procs[0]->kind == ProcKind::Idle);
}

TEST_CASE("restrictions hoist to the top with fresh names") {
    Program prog = parse_program(fixture("auction.psc"));
    ProcPtr wrapped = make_new("x", prog.main);
    // rebind: the main uses x free; wrap it as in new x { Buyer | Seller }
    Program p2 = prog;
    p2.main = make_new("x", make_par(make_call("Buyer", {Message::make_name("x")}), "x",
                                     prog.defs.at("Buyer").params[0].second.session,
                                     make_call("Seller", {Message::make_name("x")})));
    RunState st = normalize(p2.main, p2);
    REQUIRE(st.restrictions.size() == 1);
    CHECK(st.restrictions[0] != "x"); // alpha-renamed
    REQUIRE(st.root->is_leaf);
    REQUIRE(st.root->leaf.procs.size() == 2);
    CHECK(st.root->leaf.procs[0]->kind == ProcKind::Call);
    CHECK(st.root->leaf.cuts.count(st.restrictions[0]) == 1);
}

TEST_CASE("communication consumes one prefix pair per round") {
    Program prog = parse_program("main = x!5.idle |[x: !int.end]| x?(z).idle");
    RunState st = normalize(prog.main, prog);
    st = step_round(st);
    auto ls = leaves(st);
    REQUIRE(ls.size() == 1);
    CHECK(is_terminated(*ls[0]));
    CHECK(render_type(ls[0]->cuts.at("x")) == "end");
}

TEST_CASE("selection steps through case") {
    Program prog = parse_program(
        "main = x.left.done x |[x: +[1]{done; end}]| case x {done x; idle}");
    RunState st = normalize(prog.main, prog);
    st = step_round(st);
    auto ls = leaves(st);
    REQUIRE(ls.size() == 1);
    REQUIRE(ls[0]->procs.size() == 2);
    CHECK(ls[0]->procs[0]->kind == ProcKind::Done);
    CHECK(ls[0]->procs[1]->kind == ProcKind::Done);
    CHECK(render_type(ls[0]->cuts.at("x")) == "done");
}

TEST_CASE("the diverging process expands forever without terminating") {
    Program prog = parse_program(fixture("omega.psc"));
    RunState st = normalize(prog.main, prog);
    for (int i = 0; i < 5; ++i) {
        auto ls = leaves(st);
        REQUIRE(ls.size() == 1);
        CHECK(!is_terminated(*ls[0]));
        CHECK(leaf_can_step(*ls[0]));
        REQUIRE(ls[0]->procs.size() == 1);
        CHECK(ls[0]->procs[0]->kind == ProcKind::Call);
        st = step_round(st);
    }
}

TEST_CASE("immediate termination of exposed leaves") {
    Leaf t1{{make_idle(), make_done("x")}, {}, 0};
    CHECK(is_terminated(t1));
    Leaf t2{{make_in("x", "y", make_idle())}, {}, 0};
    CHECK(!is_terminated(t2));
    Leaf t3{{}, {}, 0};
    CHECK(is_terminated(t3));
}

TEST_CASE("success measure") {
    Program prog = parse_program("main = done x +[1/4] idle");
    RunState st = normalize(prog.main, prog);
    CHECK(success_measure(st, "x") == R(1, 4));
    CHECK(success_measure(st, "y") == R(0));
    CHECK(terminated_weight(st) == R(1));

    Program restricted = parse_program("main = new x {done x |[x: done]| done x}");
    RunState st2 = normalize(restricted.main, restricted);
    CHECK_THROWS_AS(success_measure(st2, st2.restrictions[0]), std::invalid_argument);
    // the renamed session is invisible from the outside
    CHECK(success_measure(st2, "x") == R(0));
}

TEST_CASE("auction run matches the closed-form geometric series") {
    Program prog = parse_program(fixture("auction.psc"));
    auto trace = bounded_run(prog.main, prog, "x", 40);
    REQUIRE(trace.size() == 41);
    // one negotiation loop takes four rounds; after k loops the success
    // lower bound is (1/3) * (1 - (1/4)^k)
    for (int k = 1; k <= 10; ++k) {
        Rational quarter_k(1);
        for (int i = 0; i < k; ++i) quarter_k *= R(1, 4);
        Rational expected = R(1, 3) * (R(1) - quarter_k);
        CHECK(trace[static_cast<std::size_t>(4 * k)].success == expected);
    }
    // monotone and bounded by the type-level probability
    for (std::size_t i = 1; i < trace.size(); ++i) {
        CHECK(trace[i].success >= trace[i - 1].success);
        CHECK(trace[i].terminated >= trace[i - 1].terminated);
        CHECK(trace[i].success <= R(1, 3));
    }
    // within 1e-3 of 1/3 after 40 rounds
    CHECK(R(1, 3) - trace.back().success < R(1, 1000));
}

TEST_CASE("geometric loop terminates with probability approaching one") {
    Program prog = parse_program(fixture("geometric.psc"));
    auto trace = bounded_run(prog.main, prog, "x", 30);
    for (std::size_t i = 1; i < trace.size(); ++i)
        CHECK(trace[i].terminated >= trace[i - 1].terminated);
    // after n expansion rounds the terminated weight is 1 - (999/1000)^k
    // for the number k of exposed choices so far; just require progress
    CHECK(trace.back().terminated > R(0));
    CHECK(trace.back().terminated < R(1));
}

TEST_CASE("weights always sum to one") {
    Program prog = parse_program(fixture("auction.psc"));
    RunState st = normalize(prog.main, prog);
    for (int r = 0; r < 12; ++r) {
        Rational total;
        std::vector<std::pair<const Leaf*, Rational>> stack;
        // fold: weight of each leaf is the product of branch probabilities
        std::function<Rational(const RunNodePtr&)> weight = [&](const RunNodePtr& n) -> Rational {
            if (n->is_leaf) return R(1);
            return n->prob.value() * weight(n->left) +
                   n->prob.complement().value() * weight(n->right);
        };
        CHECK(weight(st.root) == R(1));
        st = step_round(st);
    }
}

TEST_CASE("subject reduction along the auction run") {
    Program prog = parse_program(fixture("auction.psc"));
    CheckReport original = check_program(prog);
    REQUIRE(original.accepted());
    REQUIRE(original.session_probability("x") == R(1, 3));

    RunState st = normalize(prog.main, prog);
    for (int r = 0; r < 12; ++r) {
        st = step_round(st);
        Program reduct = prog;
        reduct.main = render_state(st);
        // through the concrete syntax and back
        Program reparsed = parse_program(render_program(reduct));
        CheckReport again = check_program(reparsed);
        CAPTURE(r);
        CAPTURE(render_program(reduct));
        REQUIRE(again.accepted());
        CHECK(again.session_probability("x") == R(1, 3));
    }
}

TEST_CASE("monte carlo: immediate success and divergence") {
    Program succ = parse_program("main = done x |[x: done]| done x");
    McResult r1 = monte_carlo(succ.main, succ, "x", 100, 50, 7);
    CHECK(r1.successes == 100);
    CHECK(r1.estimate == 1.0);

    Program omega = parse_program(fixture("omega.psc"));
    McResult r2 = monte_carlo(omega.main, omega, "x", 50, 40, 7);
    CHECK(r2.successes == 0);
    CHECK(r2.estimate == 0.0);
}

TEST_CASE("monte carlo is deterministic for a fixed seed") {
    Program prog = parse_program(fixture("auction.psc"));
    McResult a = monte_carlo(prog.main, prog, "x", 2000, 500, 42);
    McResult b = monte_carlo(prog.main, prog, "x", 2000, 500, 42);
    CHECK(a.successes == b.successes);
    McResult c = monte_carlo(prog.main, prog, "x", 2000, 500, 43);
    CHECK((c.successes != a.successes || c.estimate == a.estimate));
}

TEST_CASE("monte carlo estimate approaches the type-level value") {
    Program prog = parse_program(fixture("auction.psc"));
    McResult r = monte_carlo(prog.main, prog, "x", 10000, 1000, 1);
    // three binomial standard errors around 1/3
    double tolerance = 3.0 * std::sqrt((1.0 / 3.0) * (2.0 / 3.0) / 10000.0);
    CHECK(std::abs(r.estimate - 1.0 / 3.0) <= tolerance);
}

TEST_CASE("matrix method on a lone success leaf") {
    Program prog = parse_program("");
    CHECK(success_prob_matrix(make_end_succ(), prog.types) == Rational(1));
    CHECK(success_prob_matrix(make_end_fail(), prog.types) == Rational(0));
}

TEST_CASE("bounded run reports the initial state as round zero") {
    Program prog = parse_program("main = done x +[1/4] idle");
    auto trace = bounded_run(prog.main, prog, "x", 2);
    REQUIRE(!trace.empty());
    CHECK(trace[0].round == 0);
    CHECK(trace[0].success == Rational(1, 4));
    CHECK(trace[0].terminated == Rational(1));
}

TEST_CASE("substitution at communication cannot capture nested binders") {
    // the receiver nests a restriction whose name collides with the sent one
    Program prog = parse_program(
        "main = x!y.idle |[x: !(?int.end).end]| (x?(z).new y {z?(w).idle |[y: !int.end]| y!1.idle}"
        " |[y: ?int.end]| y!5.idle)");
    RunState st = normalize(prog.main, prog);
    for (int i = 0; i < 6; ++i) st = step_round(st);
    std::vector<const Leaf*> ls;
    collect_leaves(st.root, ls);
    for (const Leaf* l : ls) CHECK(is_terminated(*l));
}
