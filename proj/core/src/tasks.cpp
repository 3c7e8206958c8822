#include "stratind/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>

namespace stratind {

TaskSpec TaskSpec::bernoulli2(int horizon) {
    if (horizon < 1) throw std::invalid_argument("horizon must be positive");
    TaskSpec s;
    s.kind = TaskKind::Bernoulli2;
    s.num_actions = 2;
    s.horizon = horizon;
    return s;
}

TaskSpec TaskSpec::horizon_task(int free_trials, double reward_scale) {
    if (free_trials < 1) throw std::invalid_argument("free_trials must be positive");
    TaskSpec s;
    s.kind = TaskKind::Horizon;
    s.num_actions = 2;
    s.forced_trials = 4;
    s.horizon = s.forced_trials + free_trials;
    s.reward_scale = reward_scale;
    return s;
}

TaskSpec TaskSpec::restless3(int horizon) {
    if (horizon < 1) throw std::invalid_argument("horizon must be positive");
    TaskSpec s;
    s.kind = TaskKind::Restless3;
    s.num_actions = 3;
    s.horizon = horizon;
    return s;
}

std::string TaskSpec::name() const {
    switch (kind) {
    case TaskKind::Bernoulli2: return "bernoulli2";
    case TaskKind::Horizon: return "horizon";
    case TaskKind::Restless3: return "restless3";
    }
    return "?";
}

GrammarOptions TaskSpec::grammar_options(bool deterministic) const {
    GrammarOptions opt;
    opt.num_actions = num_actions;
    opt.forced_primitive = has_forced_trials();
    opt.deterministic = deterministic;
    return opt;
}

EnvState env_reset(const TaskSpec& spec, StreamRng& env_rng) {
    EnvState env;
    switch (spec.kind) {
    case TaskKind::Bernoulli2:
        for (int a = 0; a < spec.num_actions; ++a) env.arm[static_cast<std::size_t>(a)] = env_rng.uniform();
        break;
    case TaskKind::Horizon: {
        std::normal_distribution<double> mean(spec.mean_mu, spec.mean_sd);
        for (int a = 0; a < spec.num_actions; ++a) env.arm[static_cast<std::size_t>(a)] = mean(env_rng);
        // Equal-information schedule: every arm forced equally often.
        env.forced_schedule.resize(static_cast<std::size_t>(spec.forced_trials));
        for (int i = 0; i < spec.forced_trials; ++i)
            env.forced_schedule[static_cast<std::size_t>(i)] = i % spec.num_actions;
        std::shuffle(env.forced_schedule.begin(), env.forced_schedule.end(), env_rng);
        break;
    }
    case TaskKind::Restless3: {
        int span = spec.max_level - spec.min_level + 1;
        for (int a = 0; a < spec.num_actions; ++a) {
            int lvl = spec.min_level + static_cast<int>(env_rng.uniform() * span);
            env.level[static_cast<std::size_t>(a)] = std::min(lvl, spec.max_level);
            env.arm[static_cast<std::size_t>(a)] = env.level[static_cast<std::size_t>(a)] / 10.0;
        }
        break;
    }
    }
    return env;
}

double expected_reward(const TaskSpec& spec, const EnvState& env, int arm) {
    double p = env.arm[static_cast<std::size_t>(arm)];
    return spec.kind == TaskKind::Horizon ? p * spec.reward_scale : p;
}

TrialRecord env_step(const TaskSpec& spec, EnvState& env, int action, StreamRng& env_rng) {
    if (env.t >= spec.horizon) throw std::out_of_range("episode exhausted");
    TrialRecord rec;
    rec.t = env.t;
    int forced = env.forced_action();
    rec.forced = forced >= 0;
    rec.free = !rec.forced;
    rec.action = rec.forced ? forced : action;
    if (rec.action < 0 || rec.action >= spec.num_actions) throw std::out_of_range("action out of range");
    auto arm = static_cast<std::size_t>(rec.action);

    switch (spec.kind) {
    case TaskKind::Bernoulli2:
        rec.reward = env_rng.uniform() < env.arm[arm] ? 1.0 : 0.0;
        break;
    case TaskKind::Horizon: {
        std::normal_distribution<double> noise(0.0, spec.noise_sd);
        rec.reward = (env.arm[arm] + noise(env_rng)) * spec.reward_scale;
        break;
    }
    case TaskKind::Restless3:
        rec.reward = env_rng.uniform() < env.arm[arm] ? 1.0 : 0.0;
        break;
    }
    rec.expected_reward = expected_reward(spec, env, rec.action);

    if (spec.kind == TaskKind::Restless3) {
        // Each arm drifts by one grid step with probability drift_prob; steps
        // that would leave the grid are cancelled.
        for (int a = 0; a < spec.num_actions; ++a) {
            double u = env_rng.uniform();
            if (u >= spec.drift_prob) continue;
            auto& lvl = env.level[static_cast<std::size_t>(a)];
            int next = lvl + (u < spec.drift_prob / 2 ? 1 : -1);
            if (next >= spec.min_level && next <= spec.max_level) lvl = next;
            env.arm[static_cast<std::size_t>(a)] = lvl / 10.0;
        }
    }
    ++env.t;
    return rec;
}

double chance_value(const TaskSpec& spec) {
    switch (spec.kind) {
    case TaskKind::Bernoulli2: return 0.5 * spec.horizon;
    case TaskKind::Horizon: return spec.mean_mu * spec.reward_scale;
    case TaskKind::Restless3:
        // Drift with cancelled boundary steps is doubly stochastic, so the
        // uniform initial law is stationary.
        return spec.horizon * (spec.min_level + spec.max_level) / 20.0;
    }
    return 0.0;
}

double oracle_value(const TaskSpec& spec) {
    switch (spec.kind) {
    case TaskKind::Bernoulli2: return spec.horizon * 2.0 / 3.0;
    case TaskKind::Horizon:
        // E[max] of two iid normals.
        return (spec.mean_mu + spec.mean_sd / std::sqrt(std::numbers::pi)) * spec.reward_scale;
    case TaskKind::Restless3: {
        // Arms stay independent and uniform on the grid at every trial.
        int n = spec.max_level - spec.min_level + 1;
        double e_max = 0.0;
        for (int k = 0; k < n; ++k) {
            double below = std::pow(static_cast<double>(k) / n, spec.num_actions);
            e_max += 1.0 - below; // P(max index >= k)
        }
        double e_level = spec.min_level - 1 + e_max;
        return spec.horizon * e_level / 10.0;
    }
    }
    return 0.0;
}

void write_trace_csv(std::ostream& out, const std::vector<TrialRecord>& trace) {
    char buf[64];
    out << "t,action,reward,expected_reward,forced\n";
    for (const auto& r : trace) {
        out << r.t << ',' << r.action << ',';
        std::snprintf(buf, sizeof buf, "%.17g", r.reward);
        out << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", r.expected_reward);
        out << buf << ',' << (r.forced ? 1 : 0) << '\n';
    }
}

} // namespace stratind
