#include "psc/cli.hpp"

#include "psc/checker.hpp"
#include "psc/dtmc.hpp"
#include "psc/parser.hpp"
#include "psc/printer.hpp"
#include "psc/runtime.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <sstream>

namespace psc::cli {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string frac(const Rational& r) { return r.num().get_str() + "/" + r.den().get_str(); }

int report_check_failure(const CheckReport& report, bool as_json, std::ostream& out) {
    for (const auto& [type, reason] : report.type_errors) {
        if (as_json)
            out << json{{"type", type}, {"error", reason}}.dump() << "\n";
        else
            out << "type error: " << type << ": " << reason << "\n";
    }
    auto describe = [&](const DefVerdict& v) {
        if (v.accepted) return;
        if (as_json) {
            json j{{"name", v.name}, {"verdict", "rejected"}};
            if (v.local_error) {
                j["rule"] = v.local_error->rule;
                j["subterm"] = v.local_error->subterm;
                j["error"] = v.local_error->message;
            } else if (v.infeasible) {
                j["error"] = "infeasible constraint system";
            }
            out << j.dump() << "\n";
        } else {
            out << v.name << ": rejected";
            if (v.local_error)
                out << " (rule " << v.local_error->rule << ": " << v.local_error->message
                    << " at " << v.local_error->subterm << ")";
            else if (v.infeasible)
                out << " (infeasible constraint system)";
            out << "\n";
        }
    };
    for (const auto& d : report.defs) describe(d);
    if (report.has_main) describe(report.main_verdict);
    return 1;
}

int cmd_wf(const std::string& path, bool as_json, std::ostream& out) {
    Program prog = parse_program(read_file(path));
    bool all_ok = true;
    for (const auto& name : prog.types.user_order()) {
        auto err = check_wellformed(make_ref(name), prog.types);
        if (as_json) {
            json j{{"type", name}, {"wellformed", !err.has_value()}};
            if (err) j["error"] = err->str();
            out << j.dump() << "\n";
        } else {
            out << name << ": " << (err ? err->str() : "well-formed") << "\n";
        }
        if (err) all_ok = false;
    }
    return all_ok ? 0 : 1;
}

int cmd_check(const std::string& path, bool as_json, std::ostream& out) {
    Program prog = parse_program(read_file(path));
    CheckReport report = check_program(prog);
    if (!report.accepted()) return report_check_failure(report, as_json, out);

    for (const auto& d : report.defs) {
        if (as_json) {
            const ProcDef& def = prog.defs.at(d.name);
            json ctx = json::object();
            for (const auto& [pn, pt] : def.params) ctx[pn] = render_value_type(pt);
            out << json{{"name", d.name},
                        {"verdict", "accepted"},
                        {"constraints", d.constraint_count},
                        {"context", ctx}}
                       .dump()
                << "\n";
        } else {
            out << d.name << ": OK (" << d.constraint_count << " constraints)\n";
        }
    }
    if (report.has_main) {
        if (as_json) {
            json ctx = json::object();
            for (const auto& [n, p] : report.main_context) ctx[n] = "#[" + frac(p) + "]";
            out << json{{"name", "main"},
                        {"verdict", "accepted"},
                        {"constraints", report.main_verdict.constraint_count},
                        {"context", ctx}}
                       .dump()
                << "\n";
        } else {
            out << "main:";
            if (report.main_context.empty()) out << " (no sessions)";
            for (const auto& [n, p] : report.main_context) out << " " << n << " : #[" << p.str() << "]";
            out << "\n";
        }
    }
    return 0;
}

// Top-level cuts of the main process (cut name and annotation).
void collect_top_cuts(const ProcPtr& p, std::vector<std::pair<std::string, TypePtr>>& out) {
    if (p->kind != ProcKind::Par) return;
    out.emplace_back(p->cut_name, p->cut_type);
    collect_top_cuts(p->left, out);
    collect_top_cuts(p->right, out);
}

int prob_one(const std::string& label, const TypePtr& t, const Program& prog, bool as_json,
             bool edges, std::ostream& out, std::ostream& err) {
    if (auto wf = check_wellformed(t, prog.types)) {
        err << label << ": " << wf->str() << "\n";
        return 1;
    }
    Rational by_equations = success_prob(t, prog.types);
    Rational by_matrix = success_prob_matrix(t, prog.types);
    if (by_equations != by_matrix) {
        err << label << ": computation methods disagree: " << by_equations.str() << " vs "
            << by_matrix.str() << "\n";
        return 1;
    }
    if (as_json) {
        json j{{"type", label},
               {"pr", frac(by_equations)},
               {"decimal", by_equations.decimal()},
               {"methods", {{"equations", frac(by_equations)}, {"matrix", frac(by_matrix)}}}};
        if (edges) j["edges"] = edge_list(state_space(t, prog.types));
        out << j.dump() << "\n";
    } else {
        out << label << ": pr = " << by_equations.str() << " (≈" << by_equations.decimal()
            << ")\n";
        out << "  equations: " << by_equations.str() << "\n";
        out << "  matrix:    " << by_matrix.str() << "\n";
        if (edges) out << edge_list(state_space(t, prog.types));
    }
    return 0;
}

int cmd_prob(const std::string& path, const std::string& type_name, bool as_json, bool edges,
             std::ostream& out, std::ostream& err) {
    Program prog = parse_program(read_file(path));
    if (!type_name.empty()) {
        if (!prog.types.contains(type_name)) {
            err << "unknown type: " << type_name << "\n";
            return 2;
        }
        return prob_one(type_name, make_ref(type_name), prog, as_json, edges, out, err);
    }
    if (!prog.main) {
        err << "prob requires --type or a main process with cuts\n";
        return 2;
    }
    CheckReport report = check_program(prog);
    if (!report.accepted()) return report_check_failure(report, as_json, out);
    std::vector<std::pair<std::string, TypePtr>> cuts;
    collect_top_cuts(prog.main, cuts);
    if (cuts.empty()) {
        err << "main has no top-level cut to analyze\n";
        return 2;
    }
    for (const auto& [name, t] : cuts) {
        int rc = prob_one(name, t, prog, as_json, edges, out, err);
        if (rc != 0) return rc;
    }
    return 0;
}

int cmd_run(const std::string& path, const std::string& session, int rounds, bool as_json,
            std::ostream& out, std::ostream& err) {
    Program prog = parse_program(read_file(path));
    if (!prog.main) {
        err << "run requires a main process\n";
        return 2;
    }
    CheckReport report = check_program(prog);
    if (!report.accepted()) return report_check_failure(report, as_json, out);
    auto type_level = report.session_probability(session);
    if (!type_level) {
        err << "session '" << session << "' is not a measured free session of main\n";
        return 2;
    }
    auto trace = bounded_run(prog.main, prog, session, rounds);
    for (const auto& row : trace) {
        if (as_json)
            out << json{{"round", row.round},
                        {"terminated", frac(row.terminated)},
                        {"success", frac(row.success)}}
                       .dump()
                << "\n";
        else
            out << row.round << " " << frac(row.terminated) << " " << frac(row.success) << "\n";
    }
    if (as_json)
        out << json{{"type_level", frac(*type_level)}}.dump() << "\n";
    else
        out << "type " << frac(*type_level) << "\n";
    return 0;
}

int cmd_mc(const std::string& path, const std::string& session, long long samples,
           long long max_steps, std::uint64_t seed, bool as_json, std::ostream& out,
           std::ostream& err) {
    Program prog = parse_program(read_file(path));
    if (!prog.main) {
        err << "mc requires a main process\n";
        return 2;
    }
    CheckReport report = check_program(prog);
    if (!report.accepted()) return report_check_failure(report, as_json, out);
    std::set<std::string> bound;
    collect_names(prog.main, bound);
    for (const auto& n : free_names(prog.main)) bound.erase(n);
    if (bound.count(session)) {
        err << "session '" << session << "' is bound in main and cannot be measured\n";
        return 2;
    }
    McResult r = monte_carlo(prog.main, prog, session, samples, max_steps, seed);
    if (as_json) {
        out << json{{"session", session},
                    {"samples", r.samples},
                    {"successes", r.successes},
                    {"estimate", r.estimate},
                    {"seed", seed}}
                   .dump()
            << "\n";
    } else {
        out << "estimate " << std::fixed << std::setprecision(6) << r.estimate << " ("
            << r.successes << "/" << r.samples << " successes, seed " << seed << ")\n";
    }
    return 0;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"probabilistic binary session types: checker, analyzer and interpreter"};
    app.require_subcommand(1);

    std::string file, type_name, session;
    int rounds = 40;
    long long samples = 10000, max_steps = 10000;
    std::uint64_t seed = 1;
    bool as_json = false, edges = false;

    auto* wf = app.add_subcommand("wf", "check well-formedness of the named session types");
    wf->add_option("file", file)->required();
    wf->add_flag("--json", as_json);

    auto* check = app.add_subcommand("check", "type-check the program");
    check->add_option("file", file)->required();
    check->add_flag("--json", as_json);

    auto* prob = app.add_subcommand("prob", "success probability of a session type");
    prob->add_option("file", file)->required();
    prob->add_option("--type", type_name, "named type to analyze");
    prob->add_flag("--edges", edges, "print the DTMC edge list");
    prob->add_flag("--json", as_json);

    auto* runc = app.add_subcommand("run", "persistent-choice bounded run");
    runc->add_option("file", file)->required();
    runc->add_option("--session", session)->required();
    runc->add_option("--rounds", rounds);
    runc->add_flag("--json", as_json);

    auto* mc = app.add_subcommand("mc", "Monte-Carlo sampling estimate");
    mc->add_option("file", file)->required();
    mc->add_option("--session", session)->required();
    mc->add_option("--samples", samples);
    mc->add_option("--max-steps", max_steps);
    mc->add_option("--seed", seed);
    mc->add_flag("--json", as_json);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << e.what() << "\n";
        return 2;
    }

    try {
        if (wf->parsed()) return cmd_wf(file, as_json, out);
        if (check->parsed()) return cmd_check(file, as_json, out);
        if (prob->parsed()) return cmd_prob(file, type_name, as_json, edges, out, err);
        if (runc->parsed()) return cmd_run(file, session, rounds, as_json, out, err);
        if (mc->parsed()) return cmd_mc(file, session, samples, max_steps, seed, as_json, out, err);
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const std::runtime_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

} // namespace psc::cli
