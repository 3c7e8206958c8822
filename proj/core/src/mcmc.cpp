#include "stratind/mcmc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace stratind {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t uniform_index(Rng& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

bool same_signature(const OpInfo& a, const OpInfo& b) {
    if (a.result != b.result || a.arity != b.arity) return false;
    for (std::size_t i = 0; i < a.arity; ++i)
        if (a.args[i] != b.args[i]) return false;
    return true;
}

// Argument slots of `op` whose type equals the op's own result type.
std::vector<std::size_t> self_typed_slots(Op op) {
    const OpInfo& info = op_info(op);
    std::vector<std::size_t> slots;
    for (std::size_t j = 0; j < info.arity; ++j)
        if (info.args[j] == info.result) slots.push_back(j);
    return slots;
}

std::vector<std::pair<std::size_t, std::size_t>> swap_pairs(Op op) {
    const OpInfo& info = op_info(op);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t j = 0; j < info.arity; ++j)
        for (std::size_t k = j + 1; k < info.arity; ++k)
            if (info.args[j] == info.args[k]) pairs.emplace_back(j, k);
    return pairs;
}

bool node_eligible(Kernel kernel, const Expr& n, Role role, const Grammar& grammar) {
    switch (kernel) {
    case Kernel::Regen: return true;
    case Kernel::Resample: return compatible_heads(n, role, grammar).size() >= 2;
    case Kernel::Swap: return !swap_pairs(n.op()).empty();
    case Kernel::Insert: return grammar.wrapper_weight(n.type(), role) > 0.0;
    case Kernel::Delete: return !self_typed_slots(n.op()).empty();
    }
    return false;
}

std::vector<std::size_t> eligible_nodes(Kernel kernel, const Expr& e, Role role, const Grammar& grammar) {
    std::vector<std::size_t> out;
    for_each_node(e, [&](std::size_t i, const Expr& n) {
        if (node_eligible(kernel, n, role, grammar)) out.push_back(i);
    });
    return out;
}

Expr with_args(const Expr& node, std::vector<Expr> args) { return Expr::make(node.op(), std::move(args)); }

} // namespace

std::string_view to_string(Kernel kernel) {
    switch (kernel) {
    case Kernel::Regen: return "regen";
    case Kernel::Resample: return "resample";
    case Kernel::Swap: return "swap";
    case Kernel::Insert: return "insert";
    case Kernel::Delete: return "delete";
    }
    return "?";
}

std::vector<HeadChoice> compatible_heads(const Expr& node, Role role, const Grammar& grammar) {
    const OpInfo& info = op_info(node.op());
    std::vector<HeadChoice> heads;
    for (const auto& p : grammar.productions(info.result, role)) {
        if (!same_signature(info, op_info(p.op))) continue;
        if (p.op == Op::Literal) {
            for (int k = 0; k <= grammar.options().literal_max; ++k)
                heads.push_back({Op::Literal, k, p.weight * grammar.literal_prob(k)});
        } else {
            heads.push_back({p.op, 0, p.weight});
        }
    }
    return heads;
}

std::size_t eligible_count(Kernel kernel, const Expr& e, Role role, const Grammar& grammar) {
    if (kernel == Kernel::Regen) return e.size();
    std::size_t count = 0;
    for_each_node(e, [&](std::size_t, const Expr& n) { count += node_eligible(kernel, n, role, grammar); });
    return count;
}

bool kernel_applicable(Kernel kernel, const Expr& e, Role role, const Grammar& grammar) {
    return eligible_count(kernel, e, role, grammar) > 0;
}

std::vector<Kernel> applicable_kernels(const Expr& e, Role role, const Grammar& grammar, KernelMask mask) {
    std::vector<Kernel> out;
    for (Kernel k : kKernels)
        if ((mask & kernel_bit(k)) && kernel_applicable(k, e, role, grammar)) out.push_back(k);
    return out;
}

KernelMove propose_subtree_regen(const Expr& e, Role role, const Grammar& grammar, Rng& rng, SampleLimits limits) {
    std::size_t n_old = e.size();
    std::size_t i = uniform_index(rng, n_old);
    const Expr& old_sub = node_at(e, i);
    double lp_new = 0.0;
    auto fresh = try_sample_expr(grammar, role, old_sub.type(), rng, limits, &lp_new);
    if (!fresh) return {};
    double lp_old = log_prob(old_sub, role, grammar);
    Expr next = replace_node(e, i, std::move(*fresh));
    double log_h = std::log(static_cast<double>(n_old)) - std::log(static_cast<double>(next.size())) + lp_old - lp_new;
    return {std::move(next), log_h};
}

KernelMove propose_resample_primitive(const Expr& e, Role role, const Grammar& grammar, Rng& rng) {
    auto nodes = eligible_nodes(Kernel::Resample, e, role, grammar);
    if (nodes.empty()) throw std::logic_error("resample kernel not applicable");
    std::size_t i = nodes[uniform_index(rng, nodes.size())];
    const Expr& node = node_at(e, i);
    auto heads = compatible_heads(node, role, grammar);

    double total = 0.0;
    std::size_t cur = heads.size();
    for (std::size_t h = 0; h < heads.size(); ++h) {
        total += heads[h].weight;
        if (heads[h].op == node.op() && (node.op() != Op::Literal || heads[h].value == node.value())) cur = h;
    }
    if (cur == heads.size()) throw std::logic_error("current head missing from its class");
    double w_cur = heads[cur].weight;
    double rest = total - w_cur;

    // New head in proportion to weight, excluding the current one.
    double u = uniform01(rng) * rest;
    std::size_t pick = heads.size();
    for (std::size_t h = 0; h < heads.size(); ++h) {
        if (h == cur) continue;
        pick = h;
        if (u < heads[h].weight) break;
        u -= heads[h].weight;
    }
    const HeadChoice& next = heads[pick];
    Expr replaced = next.op == Op::Literal ? Expr::literal(next.value) : Expr::make(next.op, node.args());
    double log_h = std::log(w_cur) - std::log(next.weight) + std::log(rest) - std::log(total - next.weight);
    return {replace_node(e, i, std::move(replaced)), log_h};
}

KernelMove propose_swap_args(const Expr& e, Rng& rng) {
    std::vector<std::size_t> nodes;
    for_each_node(e, [&](std::size_t i, const Expr& n) {
        if (!swap_pairs(n.op()).empty()) nodes.push_back(i);
    });
    if (nodes.empty()) throw std::logic_error("swap kernel not applicable");
    std::size_t i = nodes[uniform_index(rng, nodes.size())];
    const Expr& node = node_at(e, i);
    auto pairs = swap_pairs(node.op());
    auto [a, b] = pairs[uniform_index(rng, pairs.size())];
    std::vector<Expr> args = node.args();
    std::swap(args[a], args[b]);
    return {replace_node(e, i, with_args(node, std::move(args))), 0.0};
}

KernelMove propose_insert(const Expr& e, Role role, const Grammar& grammar, Rng& rng, SampleLimits limits) {
    auto nodes = eligible_nodes(Kernel::Insert, e, role, grammar);
    if (nodes.empty()) throw std::logic_error("insert kernel not applicable");
    std::size_t i = nodes[uniform_index(rng, nodes.size())];
    const Expr& child = node_at(e, i);
    ValueType t = child.type();

    auto wrappers = grammar.wrappers(t, role);
    double w_total = grammar.wrapper_weight(t, role);
    double u = uniform01(rng) * w_total;
    const Production* wrap = &wrappers.back();
    for (const auto& p : wrappers) {
        if (u < p.weight) {
            wrap = &p;
            break;
        }
        u -= p.weight;
    }
    auto slots = self_typed_slots(wrap->op);
    std::size_t slot = slots[uniform_index(rng, slots.size())];

    const OpInfo& info = op_info(wrap->op);
    std::vector<Expr> args;
    args.reserve(info.arity);
    double lp_siblings = 0.0;
    for (std::size_t j = 0; j < info.arity; ++j) {
        if (j == slot) {
            args.push_back(child);
            continue;
        }
        auto sib = try_sample_expr(grammar, role, info.args[j], rng, limits, &lp_siblings);
        if (!sib) return {};
        args.push_back(std::move(*sib));
    }
    Expr next = replace_node(e, i, Expr::make(wrap->op, std::move(args)));

    double k = static_cast<double>(slots.size());
    double n_ins = static_cast<double>(nodes.size());
    double n_del = static_cast<double>(eligible_count(Kernel::Delete, next, role, grammar));
    double log_fwd = -std::log(n_ins) + std::log(wrap->weight / w_total) - std::log(k) + lp_siblings;
    double log_rev = -std::log(n_del) - std::log(k);
    return {std::move(next), log_rev - log_fwd};
}

KernelMove propose_delete(const Expr& e, Role role, const Grammar& grammar, Rng& rng) {
    auto nodes = eligible_nodes(Kernel::Delete, e, role, grammar);
    if (nodes.empty()) throw std::logic_error("delete kernel not applicable");
    std::size_t i = nodes[uniform_index(rng, nodes.size())];
    const Expr& node = node_at(e, i);
    auto slots = self_typed_slots(node.op());
    std::size_t slot = slots[uniform_index(rng, slots.size())];

    double lp_siblings = 0.0;
    for (std::size_t j = 0; j < node.args().size(); ++j)
        if (j != slot) lp_siblings += log_prob(node.arg(j), role, grammar);
    double w = grammar.weight(node.op(), role);
    double w_total = grammar.wrapper_weight(node.type(), role);

    Expr next = replace_node(e, i, node.arg(slot));
    double k = static_cast<double>(slots.size());
    double n_del = static_cast<double>(nodes.size());
    double n_ins = static_cast<double>(eligible_count(Kernel::Insert, next, role, grammar));
    double log_fwd = -std::log(n_del) - std::log(k);
    double log_rev = -std::log(n_ins) + std::log(w / w_total) - std::log(k) + lp_siblings;
    return {std::move(next), log_rev - log_fwd};
}

KernelMove apply_kernel(Kernel kernel, const Expr& e, Role role, const Grammar& grammar, Rng& rng,
                        SampleLimits limits) {
    switch (kernel) {
    case Kernel::Regen: return propose_subtree_regen(e, role, grammar, rng, limits);
    case Kernel::Resample: return propose_resample_primitive(e, role, grammar, rng);
    case Kernel::Swap: return propose_swap_args(e, rng);
    case Kernel::Insert: return propose_insert(e, role, grammar, rng, limits);
    case Kernel::Delete: return propose_delete(e, role, grammar, rng);
    }
    throw std::logic_error("unknown kernel");
}

ComponentMove propose_component(const Expr& e, Role role, const Grammar& grammar, Rng& rng, KernelMask mask,
                                SampleLimits limits) {
    // A move is only reversible if its reverse kernel is available too.
    for (Kernel k : kKernels)
        if (mask & kernel_bit(k)) mask |= kernel_bit(reverse_kernel(k));
    auto forward = applicable_kernels(e, role, grammar, mask);
    if (forward.empty()) throw std::invalid_argument("no applicable kernel");
    Kernel kernel = forward[uniform_index(rng, forward.size())];
    KernelMove move = apply_kernel(kernel, e, role, grammar, rng, limits);
    ComponentMove out;
    out.kernel = kernel;
    if (!move.expr) return out;
    auto backward = applicable_kernels(*move.expr, role, grammar, mask);
    out.log_hastings = move.log_hastings + std::log(static_cast<double>(forward.size())) -
                       std::log(static_cast<double>(backward.size()));
    out.expr = std::move(move.expr);
    return out;
}

std::array<bool, 4> sample_subset(Rng& rng, const std::array<double, 4>& probs) {
    std::array<bool, 4> inc{};
    bool any = false;
    for (std::size_t i = 0; i < 4; ++i) {
        inc[i] = uniform01(rng) < probs[i];
        any = any || inc[i];
    }
    if (!any) {
        double total = probs[0] + probs[1] + probs[2] + probs[3];
        double u = uniform01(rng) * total;
        std::size_t pick = 3;
        for (std::size_t i = 0; i < 4; ++i) {
            if (u < probs[i]) {
                pick = i;
                break;
            }
            u -= probs[i];
        }
        inc[pick] = true;
    }
    return inc;
}

double subset_probability(const std::array<bool, 4>& subset, const std::array<double, 4>& probs) {
    double p = 1.0;
    double empty = 1.0;
    int count = 0;
    double total = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        p *= subset[i] ? probs[i] : 1.0 - probs[i];
        empty *= 1.0 - probs[i];
        count += subset[i];
        total += probs[i];
    }
    if (count == 0) return 0.0;
    if (count == 1)
        for (std::size_t i = 0; i < 4; ++i)
            if (subset[i]) p += empty * probs[i] / total;
    return p;
}

Proposal propose_joint(const Strategy& s, const Grammar& grammar, Rng& rng, SampleLimits limits) {
    Proposal prop;
    prop.included = sample_subset(rng);
    Strategy next = s;
    bool rejected = false;
    for (std::size_t c = 0; c < 4; ++c) {
        if (!prop.included[c]) continue;
        Role role = kRoles[c];
        ComponentMove move = propose_component(s.component(role), role, grammar, rng, kAllKernels, limits);
        prop.kernels[c] = move.kernel;
        if (!move.expr) {
            rejected = true;
            continue;
        }
        prop.log_hastings += move.log_hastings;
        next.component(role) = std::move(*move.expr);
    }
    if (!rejected) prop.strategy = std::move(next);
    return prop;
}

double posterior_score(double beta, double raw_value, double log_prior) {
    if (std::isnan(raw_value) || raw_value == kNegInf || log_prior == kNegInf) return kNegInf;
    return beta * raw_value + log_prior;
}

bool TopK::admits(double score, const std::string& text) const {
    if (score == kNegInf || std::isnan(score)) return false;
    if (texts_.count(text)) return false;
    if (entries_.size() < k_) return true;
    return score > entries_[worst_index()].score;
}

std::size_t TopK::worst_index() const {
    std::size_t worst = 0;
    for (std::size_t i = 1; i < entries_.size(); ++i) {
        const auto& a = entries_[i];
        const auto& b = entries_[worst];
        if (a.score < b.score || (a.score == b.score && a.step_found > b.step_found)) worst = i;
    }
    return worst;
}

void TopK::offer(const ScoredStrategy& s) {
    if (k_ == 0 || !admits(s.score, s.text)) return;
    if (entries_.size() == k_) {
        std::size_t w = worst_index();
        texts_.erase(entries_[w].text);
        entries_[w] = s;
    } else {
        entries_.push_back(s);
    }
    texts_.insert(s.text);
}

std::vector<ScoredStrategy> TopK::sorted() const {
    auto out = entries_;
    std::stable_sort(out.begin(), out.end(), [](const ScoredStrategy& a, const ScoredStrategy& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.step_found < b.step_found;
    });
    return out;
}

const ValueEstimate& chain_value(ChainState& chain, const Posterior& post, const Strategy& s, const std::string& text) {
    auto it = chain.cache.find(text);
    if (it != chain.cache.end()) return it->second;
    return chain.cache.emplace(text, post.value(s)).first->second;
}

namespace {

void offer_current(ChainState& chain, const Posterior& post) {
    if (!chain.top.admits(chain.score, chain.text)) return;
    ScoredStrategy s{chain.current,     chain.text,  chain.log_prior, chain.value.raw,
                      chain.value.normalized, chain.value.std_error, chain.score, post.beta,
                      chain.chain,       chain.step};
    chain.top.offer(s);
}

} // namespace

ChainState init_chain(const Posterior& post, Strategy initial, Rng rng, int chain, std::size_t top_k) {
    if (!post.grammar || !post.value) throw std::invalid_argument("posterior needs a grammar and a value function");
    ChainState st{std::move(initial), {}, 0.0, {}, 0.0, 0, 0, chain, std::move(rng), TopK(top_k), {}};
    st.text = print(st.current);
    st.log_prior = log_prior(st.current, *post.grammar);
    st.value = chain_value(st, post, st.current, st.text);
    st.score = posterior_score(post.beta, st.value.raw, st.log_prior);
    offer_current(st, post);
    return st;
}

bool mh_accept(double current_score, double proposed_score, double log_hastings, double u) {
    if (current_score == kNegInf) return true;
    if (proposed_score == kNegInf) return false;
    return std::log(u) < proposed_score - current_score + log_hastings;
}

bool mh_step(ChainState& chain, const Posterior& post) {
    ++chain.step;
    Proposal prop = propose_joint(chain.current, *post.grammar, chain.rng, post.limits);
    bool accept = false;
    if (prop.strategy) {
        std::string text = print(*prop.strategy);
        double lp = log_prior(*prop.strategy, *post.grammar);
        const ValueEstimate& v = chain_value(chain, post, *prop.strategy, text);
        double score = posterior_score(post.beta, v.raw, lp);
        accept = mh_accept(chain.score, score, prop.log_hastings, uniform01(chain.rng));
        if (accept) {
            chain.current = std::move(*prop.strategy);
            chain.text = std::move(text);
            chain.log_prior = lp;
            chain.value = v;
            chain.score = score;
            ++chain.accepted;
        }
    }
    offer_current(chain, post);
    return accept;
}

std::vector<double> default_betas(const TaskSpec& task) {
    if (task.kind == TaskKind::Horizon) return {100, 300, 1000, 3000, 10000, 30000};
    return {10, 30, 100, 300, 1000, 3000};
}

int default_rollouts(const TaskSpec& task) { return task.kind == TaskKind::Restless3 ? 2000 : 10000; }

std::uint64_t chain_value_seed(std::uint64_t master, int chain) {
    return derive_seed(master, Stream::Value, static_cast<std::uint64_t>(chain));
}

std::uint64_t chain_proposal_seed(std::uint64_t master, std::size_t beta_index, int chain) {
    return derive_seed(master, static_cast<std::uint64_t>(Stream::Proposal), static_cast<std::uint64_t>(beta_index),
                       static_cast<std::uint64_t>(chain));
}

ValueFn make_value_fn(const DiscoveryConfig& config, int chain) {
    TaskSpec task = config.task;
    if (config.value_mode == ValueMode::Exact) {
        if (task.kind != TaskKind::Bernoulli2 || !config.deterministic)
            throw std::invalid_argument("exact values need the Bernoulli task and deterministic policies");
        return [task](const Strategy& s) { return exact_value_bernoulli2(s, task); };
    }
    int n = config.rollouts;
    std::uint64_t seed = chain_value_seed(config.seed, chain);
    return [task, n, seed](const Strategy& s) { return mc_value(s, task, n, seed); };
}

std::vector<ScoredStrategy> run_discovery(const DiscoveryConfig& config) {
    if (config.betas.empty()) throw std::invalid_argument("no betas given");
    for (double b : config.betas)
        if (!(b >= 0.0)) throw std::invalid_argument("betas must be non-negative");
    if (config.chains < 1 || config.steps < 0) throw std::invalid_argument("chains and steps must be positive");

    Grammar grammar(config.task.grammar_options(config.deterministic));
    std::size_t jobs = config.betas.size() * static_cast<std::size_t>(config.chains);
    std::vector<std::vector<ScoredStrategy>> results(jobs);

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            std::size_t j = next.fetch_add(1);
            if (j >= jobs) return;
            try {
                std::size_t b = j / static_cast<std::size_t>(config.chains);
                int c = static_cast<int>(j % static_cast<std::size_t>(config.chains));
                Posterior post{config.betas[b], make_value_fn(config, c), &grammar, {}};
                Rng rng(chain_proposal_seed(config.seed, b, c));
                Strategy initial = sample_strategy(grammar, rng);
                ChainState chain = init_chain(post, std::move(initial), std::move(rng), c, config.top_k);
                for (long s = 0; s < config.steps; ++s) mh_step(chain, post);
                results[j] = chain.top.sorted();
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };

    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    std::size_t n_threads = config.threads > 0 ? static_cast<std::size_t>(config.threads) : hw;
    n_threads = std::min(n_threads, jobs);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);

    std::vector<ScoredStrategy> merged;
    for (auto& r : results)
        for (auto& s : r) merged.push_back(std::move(s));
    return merged;
}

} // namespace stratind
