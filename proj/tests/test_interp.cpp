#include <doctest.h>

#include <cmath>

#include "stratind/interp.hpp"
#include "support/golden.hpp"

using namespace stratind;

namespace {

StepContext ctx(AgentState state, int prev_action, double reward, bool forced = false) {
    StepContext c;
    c.state = state;
    c.prev_action = prev_action;
    c.reward = reward;
    c.prev_forced = forced;
    return c;
}

EvalResult ev(std::string_view text, const StepContext& c = {}, int actions = 2) { return eval_expr(parse(text), c, actions); }
double scalar(std::string_view text, const StepContext& c = {}) { return ev(text, c).get<double>(); }
bool boolean(std::string_view text, const StepContext& c = {}) { return ev(text, c).get<bool>(); }
AgentState vec(std::string_view text, const StepContext& c = {}) { return ev(text, c).get<AgentState>(); }
ActionDistribution dist(std::string_view text, const StepContext& c = {}, int actions = 2) {
    return ev(text, c, actions).get<ActionDistribution>();
}
Fault fault(std::string_view text, const StepContext& c = {}, int actions = 2) { return ev(text, c, actions).fault(); }

} // namespace

TEST_CASE("win-stay lose-shift walk-through") {
    Strategy wsls = parse_strategy("vec_2(0,1)", "action(0)", "state", "argmax(assign(state,prev_action,reward))");
    auto init = init_strategy(wsls, 2);
    REQUIRE(init.ok());
    CHECK(init.memory == AgentState{0, 1, 0, 0});
    CHECK(init.policy.deterministic_action() == 0);

    CHECK(vec("assign(state,prev_action,reward)", ctx({0, 1, 0, 0}, 0, 1)) == AgentState{1, 1, 0, 0});
    auto win = step_strategy(wsls, ctx(init.memory, 0, 1), 2);
    CHECK(win.memory == AgentState{0, 1, 0, 0});
    CHECK(win.policy.deterministic_action() == 0);

    CHECK(vec("assign(state,prev_action,reward)", ctx({0, 1, 0, 0}, 0, 0)) == AgentState{0, 1, 0, 0});
    auto loss = step_strategy(wsls, ctx(init.memory, 0, 0), 2);
    CHECK(loss.policy.deterministic_action() == 1);
}

TEST_CASE("accumulator step") {
    Strategy acc = parse_strategy("vec_full(0)", "action(1)", "add_assign(state,if(==(reward,prev_action),1,0),1)",
                                  "argmax(state)");
    auto out = step_strategy(acc, ctx({2, 1, 0, 0}, 1, 1), 2);
    REQUIRE(out.ok());
    CHECK(out.memory == AgentState{2, 2, 0, 0});
    CHECK(out.policy.deterministic_action() == 0);
    CHECK(init_strategy(acc, 2).memory == AgentState{0, 0, 0, 0});
}

TEST_CASE("softmax exploit mass") {
    Strategy s = parse_strategy("vec_full(0)", "softmax(0,vec_full(0))", "state",
                                "softmax(reward,assign(state,prev_action,7))");
    auto out = step_strategy(s, ctx({0, 0, 0, 0}, 2, 1), 3);
    REQUIRE(out.ok());
    double e7 = std::exp(7.0);
    CHECK(out.policy[2] == doctest::Approx(e7 / (e7 + 2)).epsilon(1e-14));
    CHECK(out.policy[0] == doctest::Approx(1 / (e7 + 2)).epsilon(1e-14));
    CHECK(out.policy[3] == 0.0);
}

TEST_CASE("initial policies") {
    Strategy spa = parse_strategy("vec_1(0)", "logit(0)", "add_assign(state,prev_action,reward)", "softmax(1,state)");
    auto init = init_strategy(spa, 2);
    CHECK(init.policy[0] == 0.5);
    CHECK(init.policy[1] == 0.5);
    CHECK(init.memory == AgentState{0, 0, 0, 0});
    Strategy bad = parse_strategy("vec_full(1/(0))", "action(0)", "state", "action(0)");
    CHECK(init_strategy(bad, 2).fault == Fault::DivisionByZero);
}

TEST_CASE("scalar primitives") {
    auto c = ctx({3, 5, 7, 9}, 1, 0.25);
    CHECK(scalar("17") == 17);
    CHECK(scalar("+(2,3)") == 5);
    CHECK(scalar("*(2,3)") == 6);
    CHECK(scalar("-(2)") == -2);
    CHECK(scalar("1/(4)") == 0.25);
    CHECK(scalar("reward", c) == 0.25);
    CHECK(scalar("prev_action", c) == 1);
    CHECK(scalar("idx(state,2)", c) == 7);
    CHECK(scalar("state[prev_action]", c) == 5);
    CHECK(scalar("if(<(1,2),10,20)") == 10);
    CHECK(scalar("if(<(2,1),10,20)") == 20);
}

TEST_CASE("boolean primitives") {
    CHECK(boolean("<(1,2)"));
    CHECK_FALSE(boolean("<(2,2)"));
    CHECK(boolean("==(2,2)"));
    CHECK_FALSE(boolean("==(2,3)"));
    CHECK(boolean("&&(==(1,1),<(0,1))"));
    CHECK_FALSE(boolean("&&(==(1,1),<(1,0))"));
    CHECK(boolean("||(==(1,2),<(0,1))"));
    CHECK_FALSE(boolean("||(==(1,2),<(1,0))"));
    CHECK(boolean("!(==(1,2))"));
    CHECK(boolean("if(==(1,1),==(0,0),==(0,1))"));
    CHECK(boolean("prev_forced", ctx({}, 0, 0, true)));
    CHECK_FALSE(boolean("prev_forced", ctx({}, 0, 0, false)));
}

TEST_CASE("vector primitives") {
    auto c = ctx({3, 5, 7, 9}, 1, 1);
    CHECK(vec("vec_full(2)") == AgentState{2, 2, 2, 2});
    CHECK(vec("vec_1(3)") == AgentState{3, 0, 0, 0});
    CHECK(vec("vec_2(3,5)") == AgentState{3, 5, 0, 0});
    CHECK(vec("vec_3(1,2,3)") == AgentState{1, 2, 3, 0});
    CHECK(vec("vec_4(1,2,3,4)") == AgentState{1, 2, 3, 4});
    CHECK(vec("state", c) == AgentState{3, 5, 7, 9});
    CHECK(vec("assign(state,0,1)", c) == AgentState{1, 5, 7, 9});
    CHECK(vec("add_assign(state,3,1)", c) == AgentState{3, 5, 7, 10});
    CHECK(vec("if(<(0,1),vec_full(1),state)", c) == AgentState{1, 1, 1, 1});
    CHECK(vec("add_assign(assign(state,0,0),0,reward)", c) == AgentState{1, 5, 7, 9});
}

TEST_CASE("action primitives") {
    auto c = ctx({1, 3, 2, 0}, 0, 1);
    ActionDistribution a = dist("action(1)");
    CHECK(a[0] == 0.0);
    CHECK(a[1] == 1.0);
    CHECK(dist("argmax(state)", c, 3).deterministic_action() == 1);
    CHECK(dist("argmax(vec_full(4))", c, 3).deterministic_action() == 0);
    // Only the first num_actions entries take part.
    CHECK(dist("argmax(vec_4(0,1,2,9))", c, 3).deterministic_action() == 2);
    ActionDistribution l = dist("logit(2)");
    CHECK(l[0] == doctest::Approx(1 / (1 + std::exp(-2.0))).epsilon(1e-15));
    CHECK(l[0] + l[1] == doctest::Approx(1.0).epsilon(1e-15));
    ActionDistribution s = dist("softmax(2,state)", c, 3);
    double z = std::exp(2.0) + std::exp(6.0) + std::exp(4.0);
    CHECK(s[0] == doctest::Approx(std::exp(2.0) / z).epsilon(1e-14));
    CHECK(s[1] == doctest::Approx(std::exp(6.0) / z).epsilon(1e-14));
    CHECK(s[3] == 0.0);
    ActionDistribution u = dist("softmax(0,state)", c, 3);
    for (int i = 0; i < 3; ++i) CHECK(u[i] == doctest::Approx(1.0 / 3).epsilon(1e-15));
}

TEST_CASE("faults") {
    CHECK(fault("1/(0)") == Fault::DivisionByZero);
    CHECK(fault("+(1,1/(-(0)))") == Fault::DivisionByZero);
    CHECK(fault("idx(state,4)") == Fault::OutOfBounds);
    CHECK(fault("idx(state,-(1))") == Fault::OutOfBounds);
    CHECK(fault("idx(state,1/(2))") == Fault::NonIntegral);
    CHECK(fault("assign(state,1/(3),1)") == Fault::NonIntegral);
    CHECK(fault("action(2)") == Fault::OutOfBounds);
    CHECK(fault("action(2)", {}, 3) == Fault::None);
    CHECK(fault("action(1/(2))") == Fault::NonIntegral);
    CHECK(fault("action(*(1/(3),3))") == Fault::None);
    // A fault anywhere propagates outward.
    CHECK(fault("argmax(assign(state,0,1/(0)))") == Fault::DivisionByZero);
    // The untaken branch of a conditional is never evaluated.
    CHECK(fault("if(<(0,1),1,1/(0))") == Fault::None);
}

TEST_CASE("distributions are normalized") {
    auto c = ctx({0.5, -3, 40, 2}, 1, 1);
    for (const char* text : {"softmax(1,state)", "softmax(49,state)", "softmax(-(3),state)", "logit(-(40))",
                             "logit(reward)", "argmax(state)", "action(0)"}) {
        for (int n : {2, 3, 4}) {
            auto r = ev(text, c, n);
            if (!r.ok()) continue;
            const auto& d = r.get<ActionDistribution>();
            double sum = 0;
            for (int a = 0; a < n; ++a) {
                CHECK(d[a] >= 0.0);
                sum += d[a];
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("softmax shift invariance") {
    for (double shift : {-20.0, -1.5, 0.0, 3.0, 40.0}) {
        auto a = dist("softmax(3,state)", ctx({1, 2, 0.5, 0}, 0, 0), 3);
        auto b = dist("softmax(3,state)", ctx({1 + shift, 2 + shift, 0.5 + shift, shift}, 0, 0), 3);
        for (int i = 0; i < 3; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    }
    // Huge inputs stay finite.
    auto big = dist("softmax(49,state)", ctx({1000, 999, 0, 0}, 0, 0), 2);
    CHECK(big[0] == doctest::Approx(1.0));
    CHECK(std::isfinite(big[1]));
}

TEST_CASE("purity and copy semantics") {
    Expr e = parse("add_assign(state,prev_action,reward)");
    auto c = ctx({1, 2, 3, 4}, 2, 5);
    auto first = eval_expr(e, c, 3);
    auto second = eval_expr(e, c, 3);
    CHECK(first.get<AgentState>() == second.get<AgentState>());
    CHECK(first.get<AgentState>() == AgentState{1, 2, 8, 4});
    CHECK(c.state == AgentState{1, 2, 3, 4});
    CHECK(vec("assign(state,0,idx(state,0))", c) == AgentState{1, 2, 3, 4});
    CHECK(vec("add_assign(state,0,idx(add_assign(state,0,10),0))", c) == AgentState{12, 2, 3, 4});
}

TEST_CASE("argmax breaks ties toward the first action") {
    for (double v : {-3.0, 0.0, 7.5}) {
        CHECK(dist("argmax(state)", ctx({v, v, v, v}, 0, 0), 4).deterministic_action() == 0);
        CHECK(dist("argmax(state)", ctx({v, v + 1, v + 1, v}, 0, 0), 3).deterministic_action() == 1);
    }
}

TEST_CASE("distribution sampling") {
    ActionDistribution d(3);
    d[0] = 0.2;
    d[1] = 0.5;
    d[2] = 0.3;
    CHECK(d.sample(0.0) == 0);
    CHECK(d.sample(0.19) == 0);
    CHECK(d.sample(0.21) == 1);
    CHECK(d.sample(0.69) == 1);
    CHECK(d.sample(0.71) == 2);
    CHECK(d.sample(0.999999) == 2);
    CHECK(ActionDistribution::point_mass(3, 2).sample(0.0) == 2);
    CHECK_FALSE(d.deterministic_action().has_value());
}

TEST_CASE("golden table covers every primitive") {
    for (const auto& g : testing::golden_table()) CHECK(testing::check_golden(g) == "");
    CHECK(testing::uncovered_ops().empty());
}
