#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stratind/dsl.hpp"
#include "stratind/interp.hpp"
#include "stratind/mcmc.hpp"
#include "stratind/tasks.hpp"
#include "stratind/value.hpp"

namespace stratind {

// Pareto frontier --------------------------------------------------------

struct ParetoPoint {
    /// Position in the input list.
    std::size_t index = 0;
    double normalized_value = 0.0;
    double log_prior = 0.0;
    bool dominated = false;
};

/// For each point, whether some other point has value and prior both at
/// least as large with one strictly larger. O(n log n).
std::vector<bool> dominated_mask(std::span<const double> values, std::span<const double> log_priors);

/// Every input point with its domination flag, in input order.
std::vector<ParetoPoint> mark_pareto(const std::vector<ScoredStrategy>& points);

/// Non-dominated points sorted by log prior descending (then value
/// descending, then text).
std::vector<ParetoPoint> pareto_frontier(const std::vector<ScoredStrategy>& points);

// Policy state machines ---------------------------------------------------

struct MachineOptions {
    /// Distributions equal after rounding to this grid form one state.
    double quantize_tol = 1e-6;
    /// Edges whose action probability is below this are dropped.
    double prune_threshold = 0.01;
    /// States this close in max-norm merge when their transitions agree.
    double collapse_tol = 0.05;
    /// Exploration depth in trials; negative means the task horizon.
    int max_depth = -1;
    /// Most configurations explored before giving up with a partial machine.
    std::size_t budget = 100000;
    /// Replace m1 / q1 before exploring.
    std::optional<Expr> initial_memory;
    std::optional<Expr> initial_policy;
};

struct MachineState {
    ActionDistribution policy;
    /// Number of (memory, policy) configurations merged into this state.
    std::size_t configurations = 0;
};

struct MachineEdge {
    std::size_t from = 0;
    int action = 0;
    bool win = false;
    std::size_t to = 0;
    /// Probability of `action` in the source state.
    double probability = 0.0;
};

struct PolicyStateMachine {
    int num_actions = 0;
    std::vector<MachineState> states;
    std::vector<MachineEdge> edges;
    std::size_t initial = 0;
    /// Exploration stopped at the configuration budget.
    bool partial = false;
    std::size_t configurations = 0;
    std::size_t pruned_edges = 0;

    /// Target of (state, action, outcome), if the edge survived pruning.
    [[nodiscard]] std::optional<std::size_t> next(std::size_t state, int action, bool win) const;
};

/// Explores all reachable (memory, policy) configurations under win/loss
/// outcomes, prunes rare actions and merges configurations into the coarsest
/// set of states whose action distributions agree within collapse_tol and
/// whose outcome-conditioned transitions agree. Needs binary rewards.
PolicyStateMachine extract_state_machine(const Strategy& s, const TaskSpec& spec, const MachineOptions& options = {});

// Accumulator sweep -------------------------------------------------------

struct SweepRow {
    /// "reward" or "omission".
    std::string target;
    Strategy strategy;
    bool deterministic = false;
    ValueEstimate value;
    /// Win-stay lose-shift on every reachable history (deterministic rows).
    bool wsls_equivalent = false;
    bool best_in_target = false;
};

struct SweepOptions {
    int rollouts = 10000;
    std::uint64_t seed = 0;
    int max_temperature = 10;
    int max_initial = 2;
};

/// All combinations of accumulation target (reward, +(-(1),reward)),
/// initial memory vec_2(x,y), and policy (argmax with action(0) or
/// action(1) first, or softmax(w,state) with logit(0) first). Deterministic
/// rows are valued exactly, stochastic rows by Monte Carlo with one common
/// seed.
std::vector<SweepRow> accumulator_sweep(const TaskSpec& spec, const SweepOptions& options = {});

/// Checks that a deterministic strategy repeats the previous action after
/// every win and switches after every loss on all reward histories of the
/// task's horizon.
bool is_wsls(const Strategy& s, const TaskSpec& spec);

// Horizon temperature fit -------------------------------------------------

struct TemperatureScore {
    int temperature = 0;
    ValueEstimate value;
    double log_prior = 0.0;
    double score = 0.0;
};

struct HorizonFit {
    int free_trials = 0;
    int best_temperature = 0;
    std::vector<TemperatureScore> scores;
    /// Mean probability the policy assigns to the higher-mean arm on free
    /// trial i, with its standard error.
    std::vector<double> p_better;
    std::vector<double> p_better_se;
    /// Same, restricted to episodes where both arms had been chosen equally
    /// often before the trial (NaN when no episode qualifies).
    std::vector<double> p_better_equal;
    std::vector<int> equal_count_episodes;
};

struct HorizonFitOptions {
    double beta = 300.0;
    double reward_scale = 0.01;
    int rollouts = 10000;
    std::uint64_t seed = 0;
    int max_temperature = 49;
};

/// The stochastic accumulator with softmax temperature w.
Strategy horizon_template(int temperature);

/// Grid search over w = 1..max maximising beta * V + log prior, with common
/// random numbers across w, followed by the per-trial diagnostics at the
/// fitted w.
HorizonFit fit_horizon_temperature(int free_trials, const HorizonFitOptions& options = {});

} // namespace stratind
