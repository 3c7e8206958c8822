#pragma once

#include <string>
#include <vector>

#include "stratind/dsl.hpp"

namespace stratind::testing {

struct Named {
    std::string name;
    Strategy strategy;
};

inline Strategy wsls() {
    return parse_strategy("vec_2(0,1)", "action(0)", "state", "argmax(assign(state,prev_action,reward))");
}

inline Strategy accumulator() {
    return parse_strategy("vec_full(0)", "action(1)", "add_assign(state,if(==(reward,prev_action),1,0),1)",
                          "argmax(state)");
}

inline Strategy partial_accumulator() {
    return parse_strategy("vec_full(0)", "action(1)", "add_assign(state,prev_action,reward)", "argmax(state)");
}

inline Strategy stochastic_partial_accumulator() {
    return parse_strategy("vec_1(0)", "logit(0)", "add_assign(state,prev_action,reward)", "softmax(1,state)");
}

inline Strategy explore_exploit() {
    return parse_strategy_listing("m_1 = vec_full(0)\n"
                                  "q_1 = softmax(0,vec_full(0))\n"
                                  "f = state\n"
                                  "g = softmax(reward,assign(state,prev_action,7))\n");
}

inline Strategy three_loss_explorer() {
    return parse_strategy_listing("m_1 = vec_1(4)\n"
                                  "q_1 = softmax(0,vec_1(0))\n"
                                  "f = vec_1(+(1,state[reward]))\n"
                                  "g = softmax(6, assign(vec_full(state[reward]),prev_action,4))\n");
}

/// Deterministic strategies for exact/Monte Carlo agreement checks.
inline std::vector<Named> deterministic_panel() {
    return {
        {"wsls", wsls()},
        {"accumulator", accumulator()},
        {"partial accumulator", partial_accumulator()},
        {"always 0", parse_strategy("vec_full(0)", "action(0)", "state", "action(0)")},
        {"always 1", parse_strategy("vec_full(0)", "action(1)", "state", "action(1)")},
        {"alternate", parse_strategy("vec_full(0)", "action(0)", "state", "action(if(==(prev_action,0),1,0))")},
        {"win-shift", parse_strategy("vec_full(0)", "action(1)", "state", "argmax(assign(vec_full(0),prev_action,-(reward)))")},
        {"omission accumulator",
         parse_strategy("vec_2(0,0)", "action(0)", "add_assign(state,prev_action,+(-(1),reward))", "argmax(state)")},
        {"follow reward", parse_strategy("vec_full(0)", "action(0)", "state", "action(reward)")},
        {"switch at ten",
         parse_strategy("vec_full(0)", "action(0)", "add_assign(state,2,1)", "action(if(<(idx(state,2),10),0,1))")},
        {"greedy mean",
         parse_strategy("vec_full(0)", "action(0)", "add_assign(add_assign(state,prev_action,reward),+(2,prev_action),1)",
                        "argmax(vec_2(*(+(idx(state,0),1),1/(+(idx(state,2),2))),*(+(idx(state,1),1),1/(+(idx(state,3),2)))))")},
        {"faulty", parse_strategy("vec_full(0)", "action(0)", "state", "action(+(prev_action,reward))")},
    };
}

} // namespace stratind::testing
