#include "stratind/value.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace stratind {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

ValueEstimate invalid_estimate(Fault fault, ValueMethod method, int n) {
    ValueEstimate v;
    v.raw = kNegInf;
    v.normalized = kNegInf;
    v.n_rollouts = n;
    v.method = method;
    v.fault = fault;
    return v;
}

} // namespace

std::string_view to_string(ValueMethod method) {
    switch (method) {
    case ValueMethod::MonteCarlo: return "mc";
    case ValueMethod::Exact: return "exact";
    case ValueMethod::DP: return "dp";
    }
    return "?";
}

double pairwise_sum(std::span<const double> xs) {
    if (xs.size() <= 8) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

double normalize(double raw, const TaskSpec& spec) {
    double chance = chance_value(spec);
    return (raw - chance) / (oracle_value(spec) - chance);
}

EpisodeResult run_episode(const Strategy& s, const TaskSpec& spec, std::uint64_t env_seed, std::uint64_t agent_seed,
                          const TrialObserver& observer) {
    StreamRng env_rng(env_seed);
    StreamRng agent_rng(agent_seed);
    EnvState env = env_reset(spec, env_rng);
    int n = spec.num_actions;

    StepOutcome cur = init_strategy(s, n);
    if (!cur.ok()) return {kNegInf, cur.fault};

    double total = 0.0;
    for (int t = 0; t < spec.horizon; ++t) {
        int forced = env.forced_action();
        // Forced trials do not consume agent randomness.
        int action = forced >= 0 ? forced : cur.policy.sample(agent_rng.uniform());
        TrialRecord rec;
        if (observer) {
            EnvState before = env;
            rec = env_step(spec, env, action, env_rng);
            observer(rec, cur.policy, before);
        } else {
            rec = env_step(spec, env, action, env_rng);
        }
        if (rec.free) total += rec.expected_reward;
        if (t + 1 == spec.horizon) break;
        StepContext ctx{cur.memory, rec.action, rec.reward, rec.forced};
        cur = step_strategy(s, ctx, n);
        if (!cur.ok()) return {kNegInf, cur.fault};
    }
    if (spec.kind == TaskKind::Horizon) total /= spec.free_trials();
    return {total, Fault::None};
}

ValueEstimate mc_value(const Strategy& s, const TaskSpec& spec, int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("rollout count must be positive");
    std::vector<double> values(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto idx = static_cast<std::uint64_t>(i);
        EpisodeResult r = run_episode(s, spec, derive_seed(seed, Stream::Env, idx), derive_seed(seed, Stream::Agent, idx));
        if (r.fault != Fault::None) return invalid_estimate(r.fault, ValueMethod::MonteCarlo, n);
        values[static_cast<std::size_t>(i)] = r.value;
    }
    ValueEstimate est;
    est.method = ValueMethod::MonteCarlo;
    est.n_rollouts = n;
    est.raw = pairwise_sum(values) / n;
    if (n > 1) {
        std::vector<double> sq(values.size());
        std::transform(values.begin(), values.end(), sq.begin(), [&](double x) { return (x - est.raw) * (x - est.raw); });
        double var = pairwise_sum(sq) / (n - 1);
        est.std_error = std::sqrt(var / n);
    }
    est.normalized = normalize(est.raw, spec);
    return est;
}

bool is_deterministic(const Strategy& s) {
    auto det = [](const Expr& e) { return e.op() == Op::Action || e.op() == Op::Argmax; };
    return det(s.q1) && det(s.g);
}

namespace {

// One node of the forward enumeration: memory after the last update, the
// action about to be taken and the per-arm win/loss counts so far. Memory is
// keyed by bit pattern with -0 folded into +0.
struct ExactKey {
    std::array<std::uint64_t, kMemorySize> memory;
    int action;
    std::array<int, 4> counts; // w0, l0, w1, l1

    friend auto operator<=>(const ExactKey&, const ExactKey&) = default;
};

std::array<std::uint64_t, kMemorySize> memory_bits(const AgentState& m) {
    std::array<std::uint64_t, kMemorySize> out{};
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = std::bit_cast<std::uint64_t>(m[i] == 0.0 ? 0.0 : m[i]);
    return out;
}

AgentState memory_from_bits(const std::array<std::uint64_t, kMemorySize>& bits) {
    AgentState m{};
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::bit_cast<double>(bits[i]);
    return m;
}

} // namespace

ValueEstimate exact_value_bernoulli2(const Strategy& s, const TaskSpec& spec) {
    if (spec.kind != TaskKind::Bernoulli2 || spec.num_actions != 2)
        throw std::invalid_argument("exact evaluation needs the two-armed Bernoulli task");
    if (!is_deterministic(s))
        throw std::invalid_argument("exact evaluation needs a deterministic policy (q1 and g must be action/argmax)");

    StepOutcome init = init_strategy(s, 2);
    if (!init.ok()) return invalid_estimate(init.fault, ValueMethod::Exact, 0);

    auto as_action = [](const ActionDistribution& d) {
        auto a = d.deterministic_action();
        if (!a) throw std::invalid_argument("exact evaluation reached a non-deterministic policy");
        return *a;
    };

    // Paths that agree on memory, next action and counts have the same
    // future, so each layer stores their merged probability.
    std::map<ExactKey, double> layer;
    layer[{memory_bits(init.memory), as_action(init.policy), {0, 0, 0, 0}}] = 1.0;
    double value = 0.0;
    for (int t = 0; t < spec.horizon; ++t) {
        std::map<ExactKey, double> next;
        std::vector<double> contributions;
        contributions.reserve(layer.size());
        bool last = t + 1 == spec.horizon;
        for (const auto& [key, prob] : layer) {
            int a = key.action;
            int w = key.counts[static_cast<std::size_t>(2 * a)];
            int l = key.counts[static_cast<std::size_t>(2 * a + 1)];
            // Posterior predictive of a win under a uniform prior on p_a.
            double p_win = (w + 1.0) / (w + l + 2.0);
            contributions.push_back(prob * p_win);
            if (last) continue;
            AgentState memory = memory_from_bits(key.memory);
            for (int r = 1; r >= 0; --r) {
                double pr = prob * (r == 1 ? p_win : 1.0 - p_win);
                StepOutcome out = step_strategy(s, StepContext{memory, a, static_cast<double>(r), false}, 2);
                if (!out.ok()) return invalid_estimate(out.fault, ValueMethod::Exact, 0);
                ExactKey k{memory_bits(out.memory), as_action(out.policy), key.counts};
                ++k.counts[static_cast<std::size_t>(2 * a + (r == 1 ? 0 : 1))];
                next[k] += pr;
            }
        }
        value += pairwise_sum(contributions);
        layer = std::move(next);
    }

    ValueEstimate est;
    est.method = ValueMethod::Exact;
    est.raw = value;
    est.normalized = normalize(value, spec);
    return est;
}

ValueEstimate bayes_optimal_value(const TaskSpec& spec) {
    if (spec.kind != TaskKind::Bernoulli2 || spec.num_actions != 2)
        throw std::invalid_argument("Bayes-optimal value is only defined for the two-armed Bernoulli task");
    int h = spec.horizon;
    std::size_t side = static_cast<std::size_t>(h) + 1;
    // memo[w0][l0][w1][l1]; remaining trials follow from the counts.
    std::vector<double> memo(side * side * side * side, -1.0);
    auto index = [&](int w0, int l0, int w1, int l1) {
        return ((static_cast<std::size_t>(w0) * side + static_cast<std::size_t>(l0)) * side +
                static_cast<std::size_t>(w1)) *
                   side +
               static_cast<std::size_t>(l1);
    };
    std::function<double(int, int, int, int)> solve = [&](int w0, int l0, int w1, int l1) -> double {
        int used = w0 + l0 + w1 + l1;
        if (used == h) return 0.0;
        double& slot = memo[index(w0, l0, w1, l1)];
        if (slot >= 0.0) return slot;
        double p0 = (w0 + 1.0) / (w0 + l0 + 2.0);
        double p1 = (w1 + 1.0) / (w1 + l1 + 2.0);
        double v0 = p0 * (1.0 + solve(w0 + 1, l0, w1, l1)) + (1.0 - p0) * solve(w0, l0 + 1, w1, l1);
        double v1 = p1 * (1.0 + solve(w0, l0, w1 + 1, l1)) + (1.0 - p1) * solve(w0, l0, w1, l1 + 1);
        slot = std::max(v0, v1);
        return slot;
    };
    ValueEstimate est;
    est.method = ValueMethod::DP;
    est.raw = solve(0, 0, 0, 0);
    est.normalized = normalize(est.raw, spec);
    return est;
}

} // namespace stratind
