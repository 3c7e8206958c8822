#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "stratind/dsl.hpp"
#include "stratind/grammar.hpp"
#include "stratind/rng.hpp"
#include "stratind/tasks.hpp"
#include "stratind/value.hpp"

namespace stratind {

enum class Kernel : std::uint8_t { Regen, Resample, Swap, Insert, Delete };
inline constexpr std::array<Kernel, 5> kKernels{Kernel::Regen, Kernel::Resample, Kernel::Swap, Kernel::Insert,
                                                Kernel::Delete};

std::string_view to_string(Kernel kernel);

/// Kernel that undoes `kernel` (insert and delete pair up, the rest are
/// their own reverse).
constexpr Kernel reverse_kernel(Kernel kernel) {
    if (kernel == Kernel::Insert) return Kernel::Delete;
    if (kernel == Kernel::Delete) return Kernel::Insert;
    return kernel;
}

/// Bit set over kKernels.
using KernelMask = std::uint8_t;
inline constexpr KernelMask kAllKernels = 0x1f;
constexpr KernelMask kernel_bit(Kernel k) { return static_cast<KernelMask>(1u << static_cast<unsigned>(k)); }

/// Result of one kernel application to one program. `expr` is empty when the
/// move was rejected outright (a fresh subtree exceeded the sampling limits).
/// `log_hastings` is log q(old | new) - log q(new | old) for the chosen path.
struct KernelMove {
    std::optional<Expr> expr;
    double log_hastings = 0.0;
};

/// Number of nodes the kernel could act on (0 means not applicable).
std::size_t eligible_count(Kernel kernel, const Expr& e, Role role, const Grammar& grammar);
bool kernel_applicable(Kernel kernel, const Expr& e, Role role, const Grammar& grammar);
std::vector<Kernel> applicable_kernels(const Expr& e, Role role, const Grammar& grammar,
                                       KernelMask mask = kAllKernels);

KernelMove propose_subtree_regen(const Expr& e, Role role, const Grammar& grammar, Rng& rng,
                                 SampleLimits limits = {});
KernelMove propose_resample_primitive(const Expr& e, Role role, const Grammar& grammar, Rng& rng);
KernelMove propose_swap_args(const Expr& e, Rng& rng);
KernelMove propose_insert(const Expr& e, Role role, const Grammar& grammar, Rng& rng, SampleLimits limits = {});
KernelMove propose_delete(const Expr& e, Role role, const Grammar& grammar, Rng& rng);

KernelMove apply_kernel(Kernel kernel, const Expr& e, Role role, const Grammar& grammar, Rng& rng,
                        SampleLimits limits = {});

/// Heads that may replace the head of `node` while keeping its arguments.
/// Literal values count as separate heads. Includes the current head.
struct HeadChoice {
    Op op;
    int value;
    double weight;
};
std::vector<HeadChoice> compatible_heads(const Expr& node, Role role, const Grammar& grammar);

struct ComponentMove {
    std::optional<Expr> expr;
    double log_hastings = 0.0;
    Kernel kernel = Kernel::Regen;
};

/// Picks one applicable kernel uniformly (restricted to `mask`) and applies
/// it. The Hastings term includes the kernel-choice correction
/// log|A(e)| - log|A(e')|.
ComponentMove propose_component(const Expr& e, Role role, const Grammar& grammar, Rng& rng,
                                KernelMask mask = kAllKernels, SampleLimits limits = {});

/// Inclusion probabilities for (m1, q1, f, g).
inline constexpr std::array<double, 4> kInclusionProbs{0.1, 0.1, 0.2, 0.2};

/// Independent inclusion draws; an empty draw is replaced by a single
/// component chosen in proportion to the inclusion probabilities.
std::array<bool, 4> sample_subset(Rng& rng, const std::array<double, 4>& probs = kInclusionProbs);

/// Probability that sample_subset returns exactly `subset`.
double subset_probability(const std::array<bool, 4>& subset, const std::array<double, 4>& probs = kInclusionProbs);

struct Proposal {
    /// Empty when some component move was rejected outright.
    std::optional<Strategy> strategy;
    double log_hastings = 0.0;
    std::array<bool, 4> included{};
    std::array<Kernel, 4> kernels{};
};

/// Proposes to a random subset of components. The subset law does not
/// depend on the current strategy, so it cancels from the Hastings ratio.
Proposal propose_joint(const Strategy& s, const Grammar& grammar, Rng& rng, SampleLimits limits = {});

using ValueFn = std::function<ValueEstimate(const Strategy&)>;

/// beta * V + log prior, with -inf whenever V is -inf (also at beta = 0).
double posterior_score(double beta, double raw_value, double log_prior);

struct Posterior {
    double beta = 1.0;
    ValueFn value;
    const Grammar* grammar = nullptr;
    SampleLimits limits{};
};

struct ScoredStrategy {
    Strategy strategy;
    std::string text;
    double log_prior = 0.0;
    double raw_value = 0.0;
    double normalized_value = 0.0;
    double std_error = 0.0;
    double score = 0.0;
    double beta = 0.0;
    int chain = 0;
    long step_found = 0;
};

/// The K best distinct (by canonical text) strategies offered so far. Ties
/// at the boundary keep the earlier-found entry.
class TopK {
public:
    explicit TopK(std::size_t k = 100) : k_(k) {}

    /// True if an entry with this score and text would be inserted.
    [[nodiscard]] bool admits(double score, const std::string& text) const;
    void offer(const ScoredStrategy& s);

    [[nodiscard]] std::size_t capacity() const noexcept { return k_; }
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    /// Entries by score descending, then step found ascending.
    [[nodiscard]] std::vector<ScoredStrategy> sorted() const;

private:
    std::size_t worst_index() const;

    std::size_t k_;
    std::vector<ScoredStrategy> entries_;
    std::unordered_set<std::string> texts_;
};

struct ChainState {
    Strategy current;
    std::string text;
    double log_prior = 0.0;
    ValueEstimate value;
    double score = 0.0;
    long step = 0;
    long accepted = 0;
    int chain = 0;
    Rng rng;
    TopK top;
    /// Values by canonical text; valid because a chain's value seeds are fixed.
    std::unordered_map<std::string, ValueEstimate> cache;
};

/// Scores `initial` and offers it to the top-K as step 0. `rng` drives all
/// later proposals.
ChainState init_chain(const Posterior& post, Strategy initial, Rng rng, int chain = 0, std::size_t top_k = 100);

/// Value of `s` through the chain cache.
const ValueEstimate& chain_value(ChainState& chain, const Posterior& post, const Strategy& s, const std::string& text);

/// Metropolis-Hastings decision for a uniform draw u in [0, 1). Anything is
/// accepted from a -inf state; a -inf proposal is never accepted otherwise.
bool mh_accept(double current_score, double proposed_score, double log_hastings, double u);

/// One Metropolis-Hastings step with a joint proposal. Returns true on
/// acceptance. The chain state (accepted or not) is offered to the top-K.
bool mh_step(ChainState& chain, const Posterior& post);

enum class ValueMode { MonteCarlo, Exact };

struct DiscoveryConfig {
    TaskSpec task = TaskSpec::bernoulli2();
    std::vector<double> betas{10, 30, 100, 300, 1000, 3000};
    int chains = 5;
    long steps = 500000;
    int rollouts = 10000;
    std::uint64_t seed = 0;
    /// Restrict policies to action/argmax.
    bool deterministic = false;
    ValueMode value_mode = ValueMode::MonteCarlo;
    std::size_t top_k = 100;
    /// 0 picks the hardware concurrency.
    int threads = 0;
};

/// Default value-weight schedule for a task.
std::vector<double> default_betas(const TaskSpec& task);
/// Default rollout count for a task.
int default_rollouts(const TaskSpec& task);

/// Seeds shared by all chains with the same index.
std::uint64_t chain_value_seed(std::uint64_t master, int chain);
std::uint64_t chain_proposal_seed(std::uint64_t master, std::size_t beta_index, int chain);

/// Value function used by discovery for chain `chain`.
ValueFn make_value_fn(const DiscoveryConfig& config, int chain);

/// Runs every (beta, chain) pair and returns the union of their top-K
/// buffers in (beta, chain, rank) order.
std::vector<ScoredStrategy> run_discovery(const DiscoveryConfig& config);

} // namespace stratind
