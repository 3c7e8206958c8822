#include "stratind/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <tuple>

#include "stratind/grammar.hpp"

namespace stratind {

// Pareto frontier --------------------------------------------------------

std::vector<bool> dominated_mask(std::span<const double> values, std::span<const double> log_priors) {
    if (values.size() != log_priors.size()) throw std::invalid_argument("value/prior length mismatch");
    std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (log_priors[a] != log_priors[b]) return log_priors[a] > log_priors[b];
        return values[a] > values[b];
    });
    std::vector<bool> dominated(n, false);
    // Best value among points with strictly larger prior.
    double best_above = -std::numeric_limits<double>::infinity();
    bool any_above = false;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && log_priors[order[j]] == log_priors[order[i]]) ++j;
        double group_max = values[order[i]];
        for (std::size_t k = i; k < j; ++k) {
            double v = values[order[k]];
            dominated[order[k]] = v < group_max || (any_above && best_above >= v);
        }
        best_above = any_above ? std::max(best_above, group_max) : group_max;
        any_above = true;
        i = j;
    }
    return dominated;
}

std::vector<ParetoPoint> mark_pareto(const std::vector<ScoredStrategy>& points) {
    std::vector<double> v, lp;
    v.reserve(points.size());
    lp.reserve(points.size());
    for (const auto& p : points) {
        v.push_back(p.normalized_value);
        lp.push_back(p.log_prior);
    }
    auto dom = dominated_mask(v, lp);
    std::vector<ParetoPoint> out;
    out.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) out.push_back({i, v[i], lp[i], dom[i]});
    return out;
}

std::vector<ParetoPoint> pareto_frontier(const std::vector<ScoredStrategy>& points) {
    std::vector<ParetoPoint> front;
    for (const auto& p : mark_pareto(points))
        if (!p.dominated) front.push_back(p);
    std::sort(front.begin(), front.end(), [&](const ParetoPoint& a, const ParetoPoint& b) {
        if (a.log_prior != b.log_prior) return a.log_prior > b.log_prior;
        if (a.normalized_value != b.normalized_value) return a.normalized_value > b.normalized_value;
        return points[a.index].text < points[b.index].text;
    });
    return front;
}

// Policy state machines ---------------------------------------------------

std::optional<std::size_t> PolicyStateMachine::next(std::size_t state, int action, bool win) const {
    for (const auto& e : edges)
        if (e.from == state && e.action == action && e.win == win) return e.to;
    return std::nullopt;
}

namespace {

using MemoryKey = std::array<std::uint64_t, kMemorySize>;

MemoryKey memory_key(const AgentState& m) {
    MemoryKey k{};
    for (std::size_t i = 0; i < m.size(); ++i) k[i] = std::bit_cast<std::uint64_t>(m[i] == 0.0 ? 0.0 : m[i]);
    return k;
}

using PolicyKey = std::array<long long, kMemorySize>;

PolicyKey policy_key(const ActionDistribution& d, double tol) {
    PolicyKey k{};
    for (int a = 0; a < d.num_actions(); ++a) k[static_cast<std::size_t>(a)] = std::llround(d[a] / tol);
    return k;
}

double max_norm(const ActionDistribution& a, const ActionDistribution& b) {
    double m = 0.0;
    for (int i = 0; i < a.num_actions(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

struct Config {
    AgentState memory;
    ActionDistribution policy;
    int depth;
    bool expanded = false;
};

struct RawEdge {
    std::size_t from;
    int action;
    bool win;
    std::size_t to;
};

} // namespace

PolicyStateMachine extract_state_machine(const Strategy& s, const TaskSpec& spec, const MachineOptions& options) {
    if (spec.kind == TaskKind::Horizon) throw std::invalid_argument("state machines need binary (win/loss) rewards");
    if (!(options.quantize_tol > 0.0)) throw std::invalid_argument("quantize_tol must be positive");
    Strategy st = s;
    if (options.initial_memory) st.m1 = *options.initial_memory;
    if (options.initial_policy) st.q1 = *options.initial_policy;
    int n = spec.num_actions;
    int max_depth = options.max_depth < 0 ? spec.horizon : options.max_depth;

    PolicyStateMachine machine;
    machine.num_actions = n;

    std::vector<Config> configs;
    std::map<std::pair<MemoryKey, PolicyKey>, std::size_t> index;
    std::vector<RawEdge> edges;
    std::deque<std::size_t> queue;

    auto add = [&](const StepOutcome& out, int depth) -> std::optional<std::size_t> {
        if (!out.ok()) throw std::runtime_error("strategy faulted during exploration: " + std::string(to_string(out.fault)));
        auto key = std::make_pair(memory_key(out.memory), policy_key(out.policy, options.quantize_tol));
        auto it = index.find(key);
        if (it != index.end()) return it->second;
        if (configs.size() >= options.budget) {
            machine.partial = true;
            return std::nullopt;
        }
        std::size_t id = configs.size();
        configs.push_back({out.memory, out.policy, depth});
        index.emplace(key, id);
        queue.push_back(id);
        return id;
    };

    add(init_strategy(st, n), 0);
    while (!queue.empty()) {
        std::size_t c = queue.front();
        queue.pop_front();
        if (configs[c].depth >= max_depth) continue;
        configs[c].expanded = true;
        for (int a = 0; a < n; ++a) {
            if (configs[c].policy[a] <= 0.0) continue;
            for (bool win : {true, false}) {
                StepContext ctx{configs[c].memory, a, win ? 1.0 : 0.0, false};
                auto to = add(step_strategy(st, ctx, n), configs[c].depth + 1);
                if (to) edges.push_back({c, a, win, *to});
            }
        }
    }
    machine.configurations = configs.size();

    // Prune rare actions, then keep what is still reachable.
    std::vector<std::vector<RawEdge>> out_edges(configs.size());
    for (const auto& e : edges) {
        if (configs[e.from].policy[e.action] < options.prune_threshold) {
            ++machine.pruned_edges;
            continue;
        }
        out_edges[e.from].push_back(e);
    }
    std::vector<bool> reachable(configs.size(), false);
    std::vector<std::size_t> order;
    reachable[0] = true;
    order.push_back(0);
    for (std::size_t i = 0; i < order.size(); ++i)
        for (const auto& e : out_edges[order[i]])
            if (!reachable[e.to]) {
                reachable[e.to] = true;
                order.push_back(e.to);
            }
    std::sort(order.begin(), order.end());

    // Initial blocks: greedy clustering of distinct distributions.
    std::vector<std::size_t> block(configs.size(), 0);
    {
        std::vector<ActionDistribution> reps;
        std::map<PolicyKey, std::size_t> cluster_of;
        for (std::size_t c : order) {
            PolicyKey k = policy_key(configs[c].policy, options.quantize_tol);
            auto it = cluster_of.find(k);
            if (it == cluster_of.end()) {
                std::size_t chosen = reps.size();
                for (std::size_t r = 0; r < reps.size(); ++r)
                    if (max_norm(reps[r], configs[c].policy) <= options.collapse_tol) {
                        chosen = r;
                        break;
                    }
                if (chosen == reps.size()) reps.push_back(configs[c].policy);
                it = cluster_of.emplace(k, chosen).first;
            }
            block[c] = it->second;
        }
    }

    // Refine until every block has uniform outcome-conditioned transitions.
    // Configurations left unexplored (depth or budget limit) follow the first
    // explored member of their block.
    std::size_t n_blocks = 0;
    for (;;) {
        using Signature = std::pair<std::size_t, std::vector<std::tuple<int, bool, std::size_t>>>;
        std::map<Signature, std::size_t> ids;
        std::vector<std::size_t> next_block(configs.size(), 0);
        std::map<std::size_t, std::size_t> first_explored;
        for (std::size_t c : order) {
            if (!configs[c].expanded) continue;
            Signature sig{block[c], {}};
            for (const auto& e : out_edges[c]) sig.second.emplace_back(e.action, e.win, block[e.to]);
            std::sort(sig.second.begin(), sig.second.end());
            auto it = ids.try_emplace(std::move(sig), ids.size()).first;
            next_block[c] = it->second;
            first_explored.try_emplace(block[c], it->second);
        }
        std::map<std::size_t, std::size_t> frontier_ids;
        for (std::size_t c : order) {
            if (configs[c].expanded) continue;
            auto f = first_explored.find(block[c]);
            if (f != first_explored.end()) {
                next_block[c] = f->second;
            } else {
                auto it = frontier_ids.try_emplace(block[c], ids.size() + frontier_ids.size()).first;
                next_block[c] = it->second;
            }
        }
        std::size_t count = ids.size() + frontier_ids.size();
        block = std::move(next_block);
        if (count == n_blocks) break;
        n_blocks = count;
    }

    // Number states by first appearance in exploration order.
    std::map<std::size_t, std::size_t> state_of_block;
    std::vector<std::size_t> representative;
    for (std::size_t c : order) {
        auto [it, inserted] = state_of_block.try_emplace(block[c], state_of_block.size());
        if (inserted) representative.push_back(c);
        // Prefer an explored configuration as representative.
        std::size_t& rep = representative[it->second];
        if (!configs[rep].expanded && configs[c].expanded) rep = c;
        machine.states.resize(state_of_block.size());
        ++machine.states[it->second].configurations;
    }
    for (std::size_t sidx = 0; sidx < representative.size(); ++sidx) {
        std::size_t rep = representative[sidx];
        machine.states[sidx].policy = configs[rep].policy;
        for (const auto& e : out_edges[rep])
            machine.edges.push_back({sidx, e.action, e.win, state_of_block.at(block[e.to]), configs[rep].policy[e.action]});
    }
    machine.initial = state_of_block.at(block[0]);
    return machine;
}

// Accumulator sweep -------------------------------------------------------

bool is_wsls(const Strategy& s, const TaskSpec& spec) {
    int n = spec.num_actions;
    StepOutcome init = init_strategy(s, n);
    if (!init.ok()) return false;
    auto act = [](const ActionDistribution& d) { return d.deterministic_action(); };
    auto a0 = act(init.policy);
    if (!a0) return false;
    std::set<std::pair<MemoryKey, int>> seen;
    std::vector<std::tuple<AgentState, int, int>> frontier{{init.memory, *a0, 1}};
    seen.insert({memory_key(init.memory), *a0});
    while (!frontier.empty()) {
        auto [memory, a, t] = frontier.back();
        frontier.pop_back();
        if (t >= spec.horizon) continue;
        for (bool win : {true, false}) {
            StepOutcome out = step_strategy(s, StepContext{memory, a, win ? 1.0 : 0.0, false}, n);
            if (!out.ok()) return false;
            auto next = act(out.policy);
            if (!next) return false;
            if (win != (*next == a)) return false;
            if (seen.insert({memory_key(out.memory), *next}).second) frontier.emplace_back(out.memory, *next, t + 1);
        }
    }
    return true;
}

std::vector<SweepRow> accumulator_sweep(const TaskSpec& spec, const SweepOptions& options) {
    if (spec.kind != TaskKind::Bernoulli2) throw std::invalid_argument("the accumulator sweep runs on the Bernoulli task");
    const std::vector<std::pair<std::string, std::string>> targets{{"reward", "reward"},
                                                                   {"omission", "+(-(1),reward)"}};
    std::vector<std::pair<std::string, std::string>> policies{{"action(0)", "argmax(state)"},
                                                              {"action(1)", "argmax(state)"}};
    for (int w = 1; w <= options.max_temperature; ++w)
        policies.emplace_back("logit(0)", "softmax(" + std::to_string(w) + ",state)");

    std::vector<SweepRow> rows;
    for (const auto& [name, target] : targets) {
        std::string f = "add_assign(state,prev_action," + target + ")";
        std::size_t first = rows.size();
        for (int x = 0; x <= options.max_initial; ++x)
            for (int y = 0; y <= options.max_initial; ++y) {
                std::string m1 = "vec_2(" + std::to_string(x) + "," + std::to_string(y) + ")";
                for (const auto& [q1, g] : policies) {
                    SweepRow row;
                    row.target = name;
                    row.strategy = parse_strategy(m1, q1, f, g);
                    row.deterministic = is_deterministic(row.strategy);
                    if (row.deterministic) {
                        row.value = exact_value_bernoulli2(row.strategy, spec);
                        row.wsls_equivalent = is_wsls(row.strategy, spec);
                    } else {
                        row.value = mc_value(row.strategy, spec, options.rollouts, options.seed);
                    }
                    rows.push_back(std::move(row));
                }
            }
        std::size_t best = first;
        for (std::size_t i = first; i < rows.size(); ++i)
            if (rows[i].value.raw > rows[best].value.raw) best = i;
        rows[best].best_in_target = true;
    }
    return rows;
}

// Horizon temperature fit -------------------------------------------------

Strategy horizon_template(int temperature) {
    return parse_strategy("vec_1(0)", "logit(0)", "add_assign(state,prev_action,reward)",
                          "softmax(" + std::to_string(temperature) + ",state)");
}

HorizonFit fit_horizon_temperature(int free_trials, const HorizonFitOptions& options) {
    if (options.max_temperature < 1 || options.max_temperature > kMaxLiteral)
        throw std::invalid_argument("max_temperature must be in [1, 49]");
    TaskSpec spec = TaskSpec::horizon_task(free_trials, options.reward_scale);
    Grammar grammar(spec.grammar_options());

    HorizonFit fit;
    fit.free_trials = free_trials;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int w = 1; w <= options.max_temperature; ++w) {
        Strategy s = horizon_template(w);
        TemperatureScore ts;
        ts.temperature = w;
        ts.value = mc_value(s, spec, options.rollouts, options.seed);
        ts.log_prior = log_prior(s, grammar);
        ts.score = posterior_score(options.beta, ts.value.raw, ts.log_prior);
        if (ts.score > best_score) {
            best_score = ts.score;
            fit.best_temperature = w;
        }
        fit.scores.push_back(ts);
    }

    // Per-trial diagnostics at the fitted temperature, on the same rollouts.
    Strategy best = horizon_template(fit.best_temperature);
    auto m = static_cast<std::size_t>(free_trials);
    std::vector<std::vector<double>> p(m);
    std::vector<double> eq_sum(m, 0.0);
    std::vector<int> eq_n(m, 0);
    for (int i = 0; i < options.rollouts; ++i) {
        auto idx = static_cast<std::uint64_t>(i);
        std::array<int, 2> counts{0, 0};
        run_episode(best, spec, derive_seed(options.seed, Stream::Env, idx), derive_seed(options.seed, Stream::Agent, idx),
                    [&](const TrialRecord& rec, const ActionDistribution& policy, const EnvState& env) {
                        if (rec.free) {
                            auto k = static_cast<std::size_t>(rec.t - spec.forced_trials);
                            int better = env.arm[0] >= env.arm[1] ? 0 : 1;
                            p[k].push_back(policy[better]);
                            if (counts[0] == counts[1]) {
                                eq_sum[k] += policy[better];
                                ++eq_n[k];
                            }
                        }
                        ++counts[static_cast<std::size_t>(rec.action)];
                    });
    }
    for (std::size_t k = 0; k < m; ++k) {
        double n = static_cast<double>(p[k].size());
        double mean = pairwise_sum(p[k]) / n;
        double ss = 0.0;
        for (double x : p[k]) ss += (x - mean) * (x - mean);
        fit.p_better.push_back(mean);
        fit.p_better_se.push_back(n > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0);
        fit.p_better_equal.push_back(eq_n[k] > 0 ? eq_sum[k] / eq_n[k] : std::numeric_limits<double>::quiet_NaN());
        fit.equal_count_episodes.push_back(eq_n[k]);
    }
    return fit;
}

} // namespace stratind
