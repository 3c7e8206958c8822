#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "stratind/grammar.hpp"
#include "stratind/rng.hpp"

namespace stratind {

enum class TaskKind { Bernoulli2, Horizon, Restless3 };

/// Environment definition. Build with the named constructors.
struct TaskSpec {
    TaskKind kind = TaskKind::Bernoulli2;
    int num_actions = 2;
    /// Total trials per episode, forced ones included.
    int horizon = 20;

    // Horizon task.
    int forced_trials = 0;
    double mean_mu = 50.0;
    double mean_sd = 10.0;
    double noise_sd = 8.0;
    /// Multiplies rewards before the agent (and the value) sees them.
    double reward_scale = 1.0;

    // Restless bandit. Probabilities live on the grid level/10.
    int min_level = 1;
    int max_level = 9;
    double drift_prob = 0.1;

    static TaskSpec bernoulli2(int horizon = 20);
    /// Four forced trials (each arm twice) then `free_trials` free choices.
    static TaskSpec horizon_task(int free_trials, double reward_scale = 0.01);
    static TaskSpec restless3(int horizon = 500);

    [[nodiscard]] int free_trials() const noexcept { return horizon - forced_trials; }
    [[nodiscard]] bool has_forced_trials() const noexcept { return forced_trials > 0; }
    [[nodiscard]] std::string name() const;

    /// Grammar options for strategies on this task (logit for two actions,
    /// prev_forced when forced trials exist).
    [[nodiscard]] GrammarOptions grammar_options(bool deterministic = false) const;
};

/// Hidden environment state. Strategies never see it.
struct EnvState {
    /// Reward probability (Bernoulli tasks) or unscaled mean (horizon task).
    std::array<double, kMemorySize> arm{};
    /// Restless bandit probability levels (probability = level / 10).
    std::array<int, kMemorySize> level{};
    int t = 0;
    std::vector<int> forced_schedule;

    /// Scheduled action for the upcoming trial, or -1 for a free trial.
    [[nodiscard]] int forced_action() const {
        return t < static_cast<int>(forced_schedule.size()) ? forced_schedule[static_cast<std::size_t>(t)] : -1;
    }
};

struct TrialRecord {
    int t = 0;
    int action = 0;
    /// Reward as the agent sees it (after scaling).
    double reward = 0.0;
    /// Expected reward of the chosen arm given the hidden parameters (scaled).
    double expected_reward = 0.0;
    bool forced = false;
    bool free = true;
};

EnvState env_reset(const TaskSpec& spec, StreamRng& env_rng);

/// Plays one trial. On forced trials the scheduled action replaces
/// `action`. Throws std::out_of_range once the episode is exhausted.
TrialRecord env_step(const TaskSpec& spec, EnvState& env, int action, StreamRng& env_rng);

/// Expected reward (scaled) of each arm right now.
double expected_reward(const TaskSpec& spec, const EnvState& env, int arm);

/// Expected episode value of the uniform random policy.
double chance_value(const TaskSpec& spec);

/// Expected episode value of a policy that always picks the currently best
/// arm using the hidden parameters.
double oracle_value(const TaskSpec& spec);

/// Writes `t,action,reward,expected_reward,forced` rows with a header.
void write_trace_csv(std::ostream& out, const std::vector<TrialRecord>& trace);

} // namespace stratind
