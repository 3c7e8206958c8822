#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>

#include "stratind/dsl.hpp"
#include "stratind/interp.hpp"
#include "stratind/tasks.hpp"

namespace stratind {

enum class ValueMethod { MonteCarlo, Exact, DP };

std::string_view to_string(ValueMethod method);

struct ValueEstimate {
    double raw = 0.0;
    double normalized = 0.0;
    /// Standard error of `raw`; 0 for exact methods.
    double std_error = 0.0;
    int n_rollouts = 0;
    ValueMethod method = ValueMethod::MonteCarlo;
    /// Set when the strategy hit an evaluation fault (raw is -inf).
    Fault fault = Fault::None;

    [[nodiscard]] bool valid() const noexcept { return fault == Fault::None; }
};

/// Called once per trial with the trial record, the policy the agent held
/// before the trial (before forced substitution) and the hidden environment
/// as it was before the trial.
using TrialObserver = std::function<void(const TrialRecord&, const ActionDistribution&, const EnvState&)>;

struct EpisodeResult {
    double value = 0.0;
    Fault fault = Fault::None;
};

/// Plays one episode with its own environment and agent streams. Episode
/// value is the sum of expected rewards, or their mean over free trials for
/// the horizon task. A fault ends the episode with value -inf.
EpisodeResult run_episode(const Strategy& s, const TaskSpec& spec, std::uint64_t env_seed, std::uint64_t agent_seed,
                          const TrialObserver& observer = {});

/// Rollout i uses derive_seed(seed, Stream::Env, i) and
/// derive_seed(seed, Stream::Agent, i), so two strategies evaluated with the
/// same seed see the same environments and the same agent uniforms.
ValueEstimate mc_value(const Strategy& s, const TaskSpec& spec, int n, std::uint64_t seed);

/// Exact expected value on the two-armed Bernoulli task with uniform reward
/// probabilities, for strategies whose q1 and g heads are `action` or
/// `argmax`. Throws std::invalid_argument for stochastic policies.
ValueEstimate exact_value_bernoulli2(const Strategy& s, const TaskSpec& spec = TaskSpec::bernoulli2());

/// Bayes-optimal value on the Bernoulli task by backward induction over
/// Beta(1,1) posteriors.
ValueEstimate bayes_optimal_value(const TaskSpec& spec);

/// (raw - chance) / (oracle - chance).
double normalize(double raw, const TaskSpec& spec);

/// Sum by fixed-shape pairwise reduction.
double pairwise_sum(std::span<const double> xs);

/// True when q1 and g can only produce point masses.
bool is_deterministic(const Strategy& s);

} // namespace stratind
