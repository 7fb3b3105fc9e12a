#include "psc/cli.hpp"

#include <doctest.h>

#include <sstream>
#include <string>
#include <vector>

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = psc::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string fixture(const std::string& name) { return std::string(PSC_FIXTURE_DIR) + "/" + name; }

} // namespace

TEST_CASE("wf reports per-type verdicts") {
    auto r = run_cli({"wf", fixture("auction.psc")});
    CHECK(r.code == 0);
    CHECK(r.out.find("T: well-formed") != std::string::npos);
    CHECK(r.out.find("Td: well-formed") != std::string::npos);
}

TEST_CASE("wf flags reachability failures with exit 1") {
    auto r = run_cli({"wf", fixture("illformed.psc")});
    CHECK(r.code == 1);
    CHECK(r.out.find("reachability") != std::string::npos);
}

TEST_CASE("missing files and parse errors exit 2") {
    auto missing = run_cli({"wf", fixture("nope.psc")});
    CHECK(missing.code == 2);
    auto bad = run_cli({"check", fixture("syntax_error.psc")});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("parse error") != std::string::npos);
    auto usage = run_cli({"frobnicate"});
    CHECK(usage.code == 2);
}

TEST_CASE("check prints verdicts and the synthesized main context") {
    auto r = run_cli({"check", fixture("auction.psc")});
    CHECK(r.code == 0);
    CHECK(r.out.find("Buyer: OK") != std::string::npos);
    CHECK(r.out.find("Seller: OK") != std::string::npos);
    CHECK(r.out.find("main: x : #[1/3]") != std::string::npos);

    auto ws = run_cli({"check", fixture("worksharing.psc")});
    CHECK(ws.code == 0);
    CHECK(ws.out.find("x : #[2/3]") != std::string::npos);
    CHECK(ws.out.find("y : #[0]") != std::string::npos);
}

TEST_CASE("check rejects with the violated rule and exit 1") {
    auto r = run_cli({"check", fixture("typing_choices_3_bad.psc")});
    CHECK(r.code == 1);
    CHECK(r.out.find("t-left") != std::string::npos);

    auto ok = run_cli({"check", fixture("typing_choices_3_good.psc")});
    CHECK(ok.code == 0);
}

TEST_CASE("check --json emits one record per definition") {
    auto r = run_cli({"check", fixture("auction.psc"), "--json"});
    CHECK(r.code == 0);
    CHECK(r.out.find("{\"constraints\":") != std::string::npos);
    CHECK(r.out.find("\"name\":\"main\"") != std::string::npos);
    CHECK(r.out.find("\"x\":\"#[1/3]\"") != std::string::npos);
    // byte-stable across runs
    auto again = run_cli({"check", fixture("auction.psc"), "--json"});
    CHECK(again.out == r.out);
}

TEST_CASE("prob prints both methods and the exact value") {
    auto r = run_cli({"prob", fixture("auction.psc"), "--type", "T"});
    CHECK(r.code == 0);
    CHECK(r.out.find("T: pr = 1/3") != std::string::npos);
    CHECK(r.out.find("0.33333333333333333333") != std::string::npos);
    CHECK(r.out.find("equations: 1/3") != std::string::npos);
    CHECK(r.out.find("matrix:    1/3") != std::string::npos);

    auto unknown = run_cli({"prob", fixture("auction.psc"), "--type", "Nope"});
    CHECK(unknown.code == 2);
}

TEST_CASE("prob without --type analyzes the main cuts") {
    auto r = run_cli({"prob", fixture("worksharing.psc")});
    CHECK(r.code == 0);
    CHECK(r.out.find("x: pr = 2/3") != std::string::npos);
    CHECK(r.out.find("y: pr = 0") != std::string::npos);
}

TEST_CASE("prob --edges exports the transition list") {
    auto r = run_cli({"prob", fixture("auction.psc"), "--type", "T", "--edges"});
    CHECK(r.code == 0);
    CHECK(r.out.find("0 1 1/1") != std::string::npos);
}

TEST_CASE("run prints the trace and the type-level bound") {
    auto r = run_cli({"run", fixture("auction.psc"), "--session", "x", "--rounds", "8"});
    CHECK(r.code == 0);
    CHECK(r.out.find("0 0/1 0/1") == 0);
    CHECK(r.out.find("4 ") != std::string::npos);
    CHECK(r.out.find("type 1/3") != std::string::npos);

    auto bad = run_cli({"run", fixture("auction.psc"), "--session", "z", "--rounds", "4"});
    CHECK(bad.code == 2);
}

TEST_CASE("run refuses rejected programs with exit 1") {
    auto r = run_cli({"run", fixture("rejected_main.psc"), "--session", "x"});
    CHECK(r.code == 1);
    auto c = run_cli({"check", fixture("rejected_main.psc")});
    CHECK(c.code == 1);
}

TEST_CASE("mc is deterministic given the seed") {
    auto a = run_cli({"mc", fixture("auction.psc"), "--session", "x", "--samples", "500",
                      "--max-steps", "200", "--seed", "5"});
    CHECK(a.code == 0);
    auto b = run_cli({"mc", fixture("auction.psc"), "--session", "x", "--samples", "500",
                      "--max-steps", "200", "--seed", "5"});
    CHECK(a.out == b.out);
    CHECK(a.out.find("estimate 0.") != std::string::npos);
}
