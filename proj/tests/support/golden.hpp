#pragma once

// Hand-computed results for every primitive, shared by the unit tests and
// the acceptance binary.

#include <cmath>
#include <string>
#include <vector>

#include "stratind/interp.hpp"

namespace stratind::testing {

struct Golden {
    std::string text;
    std::vector<double> expected;
    int actions = 2;
};

/// Context for every golden case: state [3,5,7,9], prev_action 1, reward 1,
/// previous trial forced.
inline StepContext golden_context() {
    StepContext c;
    c.state = {3, 5, 7, 9};
    c.prev_action = 1;
    c.reward = 1;
    c.prev_forced = true;
    return c;
}

inline std::vector<Golden> golden_table() {
    double e2 = std::exp(2.0), e4 = std::exp(4.0);
    double sig = 1 / (1 + std::exp(-2.0));
    return {
        {"17", {17}},
        {"+(2,3)", {5}},
        {"*(2,3)", {6}},
        {"-(2)", {-2}},
        {"1/(4)", {0.25}},
        {"<(1,2)", {1}},
        {"<(2,2)", {0}},
        {"==(2,2)", {1}},
        {"&&(==(1,1),<(1,0))", {0}},
        {"||(==(1,2),<(0,1))", {1}},
        {"!(==(1,2))", {1}},
        {"if(<(2,1),10,20)", {20}},
        {"if(==(1,1),==(0,0),==(0,1))", {1}},
        {"if(<(0,1),vec_full(1),state)", {1, 1, 1, 1}},
        {"vec_full(2)", {2, 2, 2, 2}},
        {"vec_1(3)", {3, 0, 0, 0}},
        {"vec_2(3,5)", {3, 5, 0, 0}},
        {"vec_3(1,2,3)", {1, 2, 3, 0}},
        {"vec_4(1,2,3,4)", {1, 2, 3, 4}},
        {"idx(state,2)", {7}},
        {"assign(state,0,1)", {1, 5, 7, 9}},
        {"add_assign(state,3,reward)", {3, 5, 7, 10}},
        {"prev_action", {1}},
        {"reward", {1}},
        {"state", {3, 5, 7, 9}},
        {"prev_forced", {1}},
        {"logit(2)", {sig, 1 - sig}},
        {"softmax(1,vec_2(2,4))", {e2 / (e2 + e4), e4 / (e2 + e4)}},
        {"action(2)", {0, 0, 1}, 3},
        {"argmax(vec_3(1,7,7))", {0, 1, 0}, 3},
    };
}

inline std::vector<double> flatten(const Value& v, int actions) {
    if (auto d = std::get_if<double>(&v)) return {*d};
    if (auto b = std::get_if<bool>(&v)) return {*b ? 1.0 : 0.0};
    if (auto s = std::get_if<AgentState>(&v)) return {s->begin(), s->end()};
    std::vector<double> out;
    const auto& dist = std::get<ActionDistribution>(v);
    for (int a = 0; a < actions; ++a) out.push_back(dist[a]);
    return out;
}

/// Empty when the case matches, otherwise a description of the mismatch.
inline std::string check_golden(const Golden& g) {
    auto r = eval_expr(parse(g.text), golden_context(), g.actions);
    if (!r.ok()) return g.text + ": fault " + std::string(to_string(r.fault()));
    auto got = flatten(r.value(), g.actions);
    bool same = got.size() == g.expected.size();
    for (std::size_t i = 0; same && i < got.size(); ++i)
        same = std::abs(got[i] - g.expected[i]) <= 1e-14 * std::max(1.0, std::abs(g.expected[i]));
    return same ? "" : g.text + ": wrong result";
}

/// Operators that no golden case exercises.
inline std::vector<Op> uncovered_ops() {
    std::vector<bool> seen(kOpCount, false);
    for (const auto& g : golden_table())
        for_each_node(parse(g.text), [&](std::size_t, const Expr& n) { seen[static_cast<std::size_t>(n.op())] = true; });
    std::vector<Op> out;
    for (std::size_t i = 0; i < kOpCount; ++i)
        if (!seen[i]) out.push_back(static_cast<Op>(i));
    return out;
}

} // namespace stratind::testing
