#include <doctest.h>

#include "stratind/dsl.hpp"
#include "stratind/grammar.hpp"

using namespace stratind;

namespace {

ProgramError::Kind error_kind(std::string_view text) {
    try {
        parse(text);
    } catch (const ProgramError& e) {
        return e.kind();
    }
    FAIL("no error for ", text);
    return ProgramError::Kind::Syntax;
}

} // namespace

TEST_CASE("parse listings") {
    Expr g = parse("argmax(assign(state,prev_action,reward))");
    CHECK(g.op() == Op::Argmax);
    CHECK(g.args().size() == 1);
    CHECK(g.arg(0).op() == Op::Assign);
    CHECK(g.type() == ValueType::ActionDist);

    Expr m = parse("vec_2(0,1)");
    CHECK(m.type() == ValueType::Vector);
    REQUIRE(m.args().size() == 2);
    CHECK(m.arg(0).value() == 0);
    CHECK(m.arg(1).value() == 1);
}

TEST_CASE("print canonical text") {
    CHECK(print(parse("add_assign( state , prev_action , reward )")) == "add_assign(state,prev_action,reward)");
    CHECK(print(Expr::literal(0)) == "0");
    CHECK(print(Expr()) == "0");
    CHECK(print(parse("state[reward]")) == "idx(state,reward)");
    CHECK(parse("state[reward]") == parse("idx(state,reward)"));
}

TEST_CASE("parse errors") {
    CHECK(error_kind("if(3,1,2)") == ProgramError::Kind::Type);
    CHECK(error_kind("+(1)") == ProgramError::Kind::Arity);
    CHECK(error_kind("50") == ProgramError::Kind::LiteralRange);
    CHECK(error_kind("vec_2(0,") == ProgramError::Kind::Syntax);
    CHECK(error_kind("frobnicate(1)") == ProgramError::Kind::Syntax);
    CHECK(error_kind("1 2") == ProgramError::Kind::Syntax);

    try {
        parse("vec_2(0,");
    } catch (const ProgramError& e) {
        CHECK(e.position() == 8);
    }
}

TEST_CASE("typed construction") {
    CHECK_THROWS_AS(Expr::make(Op::Add, {Expr::literal(1)}), ProgramError);
    CHECK_THROWS_AS(Expr::make(Op::Add, {Expr::literal(1), Expr::make(Op::State)}), ProgramError);
    CHECK_THROWS_AS(Expr::literal(50), ProgramError);
    CHECK_THROWS_AS(Expr::literal(-1), ProgramError);
    Expr e = Expr::make(Op::Add, {Expr::literal(1), Expr::make(Op::Reward)});
    CHECK(e.size() == 3);
    CHECK(e.depth() == 2);
}

TEST_CASE("preorder node access") {
    Expr e = parse("add_assign(state,prev_action,+(1,reward))");
    std::vector<std::string> seen;
    for_each_node(e, [&](std::size_t i, const Expr& n) {
        CHECK(&node_at(e, i) != nullptr);
        seen.push_back(print(n));
    });
    REQUIRE(seen.size() == e.size());
    CHECK(seen[0] == print(e));
    CHECK(seen[1] == "state");
    CHECK(seen[3] == "+(1,reward)");
    CHECK(seen[5] == "reward");
    Expr r = replace_node(e, 3, Expr::literal(7));
    CHECK(print(r) == "add_assign(state,prev_action,7)");
    CHECK(print(e) == "add_assign(state,prev_action,+(1,reward))");
}

TEST_CASE("parse/print round trip on sampled programs") {
    std::vector<GrammarOptions> options(3);
    options[1].forced_primitive = true;
    options[2].num_actions = 3;
    Rng rng(11);
    for (const auto& o : options) {
        Grammar g(o);
        for (int i = 0; i < 1000; ++i) {
            Role role = kRoles[static_cast<std::size_t>(i % 4)];
            Expr e = sample_expr(g, role, root_type(role), rng);
            std::string text = print(e);
            Expr back = parse(text);
            REQUIRE(back == e);
            CHECK(print(back) == text);
        }
    }
}

TEST_CASE("strategy listings") {
    Strategy s = parse_strategy_listing("m_1 = vec_2(0,1)\n"
                                        "q_1 = action(0)\n"
                                        "f = state\n"
                                        "g = argmax(assign(state,\n"
                                        "                  prev_action,reward))\n");
    CHECK(print(s) == "vec_2(0,1);action(0);state;argmax(assign(state,prev_action,reward))");
    CHECK(s == parse_strategy("vec_2(0,1)", "action(0)", "state", "argmax(assign(state,prev_action,reward))"));
    CHECK_THROWS_AS(parse_strategy_listing("m_1 = vec_2(0,1)\nq_1 = action(0)\nf = state\n"), ProgramError);
}

TEST_CASE("role checks") {
    CHECK_THROWS_AS(parse_strategy("state", "action(0)", "state", "action(0)"), ProgramError);
    CHECK_THROWS_AS(parse_strategy("vec_full(0)", "action(reward)", "state", "action(0)"), ProgramError);
    CHECK_THROWS_AS(parse_strategy("vec_full(0)", "action(0)", "action(0)", "action(0)"), ProgramError);
    CHECK_THROWS_AS(check_role(parse("vec_full(if(<(0,1),1,0))"), Role::InitMemory), ProgramError);
    CHECK_NOTHROW(check_role(parse("vec_full(if(<(0,1),1,0))"), Role::Update));
    CHECK(root_type(Role::InitMemory) == ValueType::Vector);
    CHECK(root_type(Role::Policy) == ValueType::ActionDist);
}
