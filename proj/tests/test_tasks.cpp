#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "stratind/tasks.hpp"

using namespace stratind;

TEST_CASE("task definitions") {
    auto b = TaskSpec::bernoulli2();
    CHECK(b.horizon == 20);
    CHECK(b.num_actions == 2);
    auto r = TaskSpec::restless3();
    CHECK(r.horizon == 500);
    CHECK(r.num_actions == 3);
    auto h1 = TaskSpec::horizon_task(1);
    auto h6 = TaskSpec::horizon_task(6);
    CHECK(h1.horizon == 5);
    CHECK(h6.horizon == 10);
    CHECK(h6.free_trials() == 6);
    CHECK(h6.grammar_options().forced_primitive);
    CHECK_FALSE(b.grammar_options().forced_primitive);
    CHECK(b.grammar_options(true).deterministic);
    CHECK_THROWS(TaskSpec::bernoulli2(0));
}

TEST_CASE("bernoulli reset and step") {
    auto spec = TaskSpec::bernoulli2();
    StreamRng rng(1);
    double sum = 0, sum_max = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        EnvState env = env_reset(spec, rng);
        CHECK((env.arm[0] >= 0 && env.arm[0] < 1));
        sum += env.arm[0] + env.arm[1];
        sum_max += std::max(env.arm[0], env.arm[1]);
    }
    CHECK(sum / (2 * n) == doctest::Approx(0.5).epsilon(0.01));
    CHECK(sum_max / n == doctest::Approx(2.0 / 3).epsilon(0.01));

    EnvState env = env_reset(spec, rng);
    env.arm[0] = 0.3;
    double rewards = 0;
    for (int i = 0; i < 20; ++i) {
        auto rec = env_step(spec, env, 0, rng);
        CHECK(rec.expected_reward == 0.3);
        CHECK((rec.reward == 0.0 || rec.reward == 1.0));
        CHECK(rec.free);
        CHECK(rec.t == i);
        rewards += rec.reward;
    }
    CHECK_THROWS_AS(env_step(spec, env, 0, rng), std::out_of_range);

    // Reward frequency matches the arm probability.
    long wins = 0;
    const int m = 20000;
    for (int i = 0; i < m; ++i) {
        EnvState e = env_reset(spec, rng);
        e.arm[1] = 0.8;
        wins += env_step(spec, e, 1, rng).reward > 0;
    }
    CHECK(static_cast<double>(wins) / m == doctest::Approx(0.8).epsilon(0.02));
}

TEST_CASE("same seed, same episode") {
    for (auto spec : {TaskSpec::bernoulli2(), TaskSpec::restless3(), TaskSpec::horizon_task(6)}) {
        StreamRng a(42), b(42);
        EnvState ea = env_reset(spec, a), eb = env_reset(spec, b);
        for (int t = 0; t < spec.horizon; ++t) {
            auto ra = env_step(spec, ea, t % spec.num_actions, a);
            auto rb = env_step(spec, eb, t % spec.num_actions, b);
            CHECK(ra.reward == rb.reward);
            CHECK(ra.expected_reward == rb.expected_reward);
            CHECK(ra.action == rb.action);
        }
    }
}

TEST_CASE("restless bandit levels") {
    auto spec = TaskSpec::restless3();
    StreamRng rng(7);
    std::vector<long> initial(11, 0);
    long moves = 0, steps = 0;
    for (int ep = 0; ep < 200; ++ep) {
        EnvState env = env_reset(spec, rng);
        for (int a = 0; a < 3; ++a) initial[static_cast<std::size_t>(env.level[static_cast<std::size_t>(a)])]++;
        for (int t = 0; t < spec.horizon; ++t) {
            auto before = env.level;
            auto rec = env_step(spec, env, t % 3, rng);
            CHECK(rec.expected_reward == before[static_cast<std::size_t>(rec.action)] / 10.0);
            for (int a = 0; a < 3; ++a) {
                int lvl = env.level[static_cast<std::size_t>(a)];
                CHECK((lvl >= 1 && lvl <= 9));
                CHECK(env.arm[static_cast<std::size_t>(a)] == lvl / 10.0);
                int b = before[static_cast<std::size_t>(a)];
                CHECK(std::abs(lvl - b) <= 1);
                if (b > 1 && b < 9) {
                    steps++;
                    moves += lvl != b;
                }
            }
        }
    }
    CHECK(initial[0] == 0);
    CHECK(initial[10] == 0);
    for (int k = 1; k <= 9; ++k) CHECK(initial[static_cast<std::size_t>(k)] > 0);
    CHECK(static_cast<double>(moves) / steps == doctest::Approx(0.1).epsilon(0.05));
}

TEST_CASE("restless drift stays in bounds") {
    auto spec = TaskSpec::restless3();
    StreamRng rng(3);
    EnvState env = env_reset(spec, rng);
    long up_blocked = 0;
    for (int i = 0; i < 5000; ++i) {
        env.t = 0;
        env.level = {9, 1, 5, 0};
        env.arm = {0.9, 0.1, 0.5, 0};
        env_step(spec, env, 0, rng);
        CHECK(env.level[0] >= 8);
        CHECK(env.level[1] <= 2);
        up_blocked += env.level[0] == 9;
    }
    // Only the downward half of the drift mass can move a top arm.
    CHECK(static_cast<double>(up_blocked) / 5000 == doctest::Approx(0.95).epsilon(0.02));
}

TEST_CASE("horizon task forced phase") {
    auto spec = TaskSpec::horizon_task(6);
    StreamRng rng(5);
    int orders = 0;
    std::vector<int> first;
    for (int ep = 0; ep < 200; ++ep) {
        EnvState env = env_reset(spec, rng);
        int count[2] = {0, 0};
        std::vector<int> seq;
        for (int t = 0; t < spec.horizon; ++t) {
            auto rec = env_step(spec, env, 1, rng);
            if (t < 4) {
                CHECK(rec.forced);
                CHECK_FALSE(rec.free);
                count[rec.action]++;
                seq.push_back(rec.action);
            } else {
                CHECK(rec.free);
                CHECK(rec.action == 1);
            }
            CHECK(rec.expected_reward == doctest::Approx(env.arm[static_cast<std::size_t>(rec.action)] * 0.01));
        }
        CHECK(count[0] == 2);
        CHECK(count[1] == 2);
        if (ep == 0) first = seq;
        orders += seq != first;
    }
    CHECK(orders > 0);
}

TEST_CASE("chance and oracle baselines") {
    CHECK(chance_value(TaskSpec::bernoulli2()) == 10.0);
    CHECK(oracle_value(TaskSpec::bernoulli2()) == doctest::Approx(40.0 / 3).epsilon(1e-15));
    for (auto spec : {TaskSpec::bernoulli2(), TaskSpec::restless3(), TaskSpec::horizon_task(1)})
        CHECK(chance_value(spec) < oracle_value(spec));

    // Independent simulation of the restless bandit: uniform random and
    // omniscient policies over 10^6 trials.
    std::mt19937_64 gen(99);
    std::uniform_int_distribution<int> level(1, 9);
    std::uniform_real_distribution<double> u(0, 1);
    const int episodes = 2000, horizon = 500;
    std::vector<double> chance_eps, oracle_eps;
    for (int ep = 0; ep < episodes; ++ep) {
        int lv[3] = {level(gen), level(gen), level(gen)};
        double c = 0, o = 0;
        for (int t = 0; t < horizon; ++t) {
            c += (lv[0] + lv[1] + lv[2]) / 30.0;
            o += std::max({lv[0], lv[1], lv[2]}) / 10.0;
            for (int& x : lv) {
                double d = u(gen);
                if (d < 0.05 && x < 9) x++;
                else if (d >= 0.05 && d < 0.1 && x > 1) x--;
            }
        }
        chance_eps.push_back(c);
        oracle_eps.push_back(o);
    }
    auto mean_se = [](const std::vector<double>& xs) {
        double m = 0, v = 0;
        for (double x : xs) m += x;
        m /= xs.size();
        for (double x : xs) v += (x - m) * (x - m);
        return std::make_pair(m, std::sqrt(v / (xs.size() - 1) / xs.size()));
    };
    auto [cm, cse] = mean_se(chance_eps);
    auto [om, ose] = mean_se(oracle_eps);
    CHECK(std::abs(cm - chance_value(TaskSpec::restless3())) < 4 * cse);
    CHECK(std::abs(om - oracle_value(TaskSpec::restless3())) < 4 * ose);

    // Horizon task: arm means are Normal(50, 10).
    std::normal_distribution<double> mean(50, 10);
    double sum = 0, sum_max = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double a = mean(gen), b = mean(gen);
        sum += (a + b) / 2;
        sum_max += std::max(a, b);
    }
    auto h = TaskSpec::horizon_task(6);
    CHECK(sum / n * 0.01 == doctest::Approx(chance_value(h)).epsilon(1e-3));
    CHECK(sum_max / n * 0.01 == doctest::Approx(oracle_value(h)).epsilon(1e-3));
}

TEST_CASE("trace export") {
    std::vector<TrialRecord> trace(2);
    trace[0].action = 1;
    trace[0].reward = 1;
    trace[0].expected_reward = 0.25;
    trace[1].t = 1;
    trace[1].forced = true;
    trace[1].free = false;
    std::ostringstream out;
    write_trace_csv(out, trace);
    CHECK(out.str() == "t,action,reward,expected_reward,forced\n0,1,1,0.25,0\n1,0,0,0,1\n");
}
