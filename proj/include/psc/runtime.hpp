#pragma once

#include "psc/ast.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace psc {

/// Fresh-name supply; primed with every name occurring in the program so
/// generated names never collide.
class NameSupply {
public:
    void reserve(const std::string& name) { used_.insert(name); }
    std::string fresh(const std::string& base);

private:
    std::set<std::string> used_;
};

/// Exposed configuration: a flat list of sequential processes together with
/// the cuts connecting them. Each cut records the current session type of
/// the session as seen from the side that was on the left of the original
/// parallel composition; the annotation advances as the session reduces.
struct Leaf {
    std::vector<ProcPtr> procs;
    std::map<std::string, TypePtr> cuts;
    long long steps = 0;
};

struct RunNode;
using RunNodePtr = std::shared_ptr<const RunNode>;

/// Distribution tree over exposed configurations.
struct RunNode {
    bool is_leaf = true;
    Probability prob; // internal node
    RunNodePtr left, right;
    Leaf leaf;

    static RunNodePtr make_leaf(Leaf l);
    static RunNodePtr make_node(Probability p, RunNodePtr l, RunNodePtr r);
};

struct RunState {
    const Program* prog = nullptr;
    std::vector<std::string> restrictions;
    RunNodePtr root;
    NameSupply names;
};

/// Rewrites a process into normal form: restrictions hoisted to the top
/// (alpha-renamed to fresh names), probabilistic choices hoisted above
/// parallel composition, parallel compositions flattened, and choices with
/// trivial probability collapsed.
RunState normalize(const ProcPtr& p, const Program& prog);

/// One round: per leaf, expand every call at the head once, re-normalize,
/// then fire at most one communication redex (lowest channel name first).
RunState step_round(const RunState& s);

/// True when every component is inaction or a success marker.
bool is_terminated(const Leaf& leaf);

/// True when the leaf can make progress: a call to expand or a redex to fire.
bool leaf_can_step(const Leaf& leaf);

/// Total weight of terminated leaves.
Rational terminated_weight(const RunState& s);

/// Success measure of a session: 1 on leaves containing its success marker,
/// 0 on other leaves, convex combination at distribution nodes. The session
/// must not be restricted.
Rational success_measure(const RunState& s, const std::string& session);

/// Collects the leaves in left-to-right order (for property tests).
void collect_leaves(const RunNodePtr& node, std::vector<const Leaf*>& out);

/// Renders the whole state back into a process with parallel compositions
/// carrying the advanced cut annotations; the result re-checks in the
/// program's synthesized context.
ProcPtr render_state(const RunState& s);

struct TraceRow {
    int round;
    Rational terminated;
    Rational success;
};

/// Normalizes, then iterates step_round, recording the terminated weight and
/// the success lower bound after each round (round 0 is the initial state).
std::vector<TraceRow> bounded_run(const ProcPtr& main, const Program& prog,
                                  const std::string& session, int rounds);

struct McResult {
    long long successes = 0;
    long long samples = 0;
    double estimate = 0.0;
};

/// Sampling semantics: every probabilistic choice is resolved immediately by
/// a seeded draw instead of kept persistent. A sample succeeds when the
/// success marker for the session appears before termination or the step
/// cap. Deterministic for a fixed seed.
McResult monte_carlo(const ProcPtr& main, const Program& prog, const std::string& session,
                     long long samples, long long max_steps, std::uint64_t seed);

} // namespace psc
