#include <benchmark/benchmark.h>

#include "stratind/analysis.hpp"
#include "stratind/grammar.hpp"
#include "stratind/interp.hpp"
#include "stratind/mcmc.hpp"
#include "stratind/value.hpp"

using namespace stratind;

namespace {

Strategy accumulator() {
    return parse_strategy("vec_full(0)", "action(1)", "add_assign(state,if(==(reward,prev_action),1,0),1)",
                          "argmax(state)");
}

Strategy stochastic_accumulator() {
    return parse_strategy("vec_2(0,0)", "logit(0)", "add_assign(state,prev_action,reward)", "softmax(1,state)");
}

void BM_SampleStrategy(benchmark::State& state) {
    Grammar g(TaskSpec::bernoulli2().grammar_options(false));
    Rng rng(1);
    for (auto _ : state) benchmark::DoNotOptimize(sample_strategy(g, rng));
}
BENCHMARK(BM_SampleStrategy);

void BM_LogPrior(benchmark::State& state) {
    Grammar g(TaskSpec::bernoulli2().grammar_options(false));
    Strategy s = accumulator();
    for (auto _ : state) benchmark::DoNotOptimize(log_prior(s, g));
}
BENCHMARK(BM_LogPrior);

void BM_Step(benchmark::State& state) {
    Strategy s = accumulator();
    StepContext c;
    c.state = {2, 1, 0, 0};
    c.prev_action = 1;
    c.reward = 1;
    for (auto _ : state) benchmark::DoNotOptimize(step_strategy(s, c, 2));
}
BENCHMARK(BM_Step);

void BM_McValue(benchmark::State& state) {
    auto spec = TaskSpec::bernoulli2();
    Strategy s = stochastic_accumulator();
    for (auto _ : state) benchmark::DoNotOptimize(mc_value(s, spec, static_cast<int>(state.range(0)), 3));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_McValue)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_McValueRestless(benchmark::State& state) {
    auto spec = TaskSpec::restless3();
    Strategy s = parse_strategy("vec_full(0)", "softmax(0,vec_full(0))", "state",
                                "softmax(reward,assign(state,prev_action,7))");
    for (auto _ : state) benchmark::DoNotOptimize(mc_value(s, spec, 100, 3));
}
BENCHMARK(BM_McValueRestless)->Unit(benchmark::kMillisecond);

void BM_ExactValue(benchmark::State& state) {
    Strategy s = accumulator();
    for (auto _ : state) benchmark::DoNotOptimize(exact_value_bernoulli2(s));
}
BENCHMARK(BM_ExactValue)->Unit(benchmark::kMicrosecond);

void BM_MhStepExact(benchmark::State& state) {
    auto task = TaskSpec::bernoulli2();
    Grammar g(task.grammar_options(true));
    Posterior post{30.0, [task](const Strategy& s) { return exact_value_bernoulli2(s, task); }, &g, {}};
    Rng rng(4);
    auto chain = init_chain(post, sample_strategy(g, rng), Rng(5));
    for (auto _ : state) benchmark::DoNotOptimize(mh_step(chain, post));
}
BENCHMARK(BM_MhStepExact)->Unit(benchmark::kMicrosecond);

void BM_BayesOptimal(benchmark::State& state) {
    auto spec = TaskSpec::bernoulli2();
    for (auto _ : state) benchmark::DoNotOptimize(bayes_optimal_value(spec));
}
BENCHMARK(BM_BayesOptimal)->Unit(benchmark::kMillisecond);

void BM_StateMachine(benchmark::State& state) {
    Strategy s = parse_strategy("vec_full(0)", "softmax(0,vec_full(0))", "state",
                                "softmax(reward,assign(state,prev_action,7))");
    auto spec = TaskSpec::restless3();
    for (auto _ : state) benchmark::DoNotOptimize(extract_state_machine(s, spec));
}
BENCHMARK(BM_StateMachine)->Unit(benchmark::kMicrosecond);

} // namespace

BENCHMARK_MAIN();
