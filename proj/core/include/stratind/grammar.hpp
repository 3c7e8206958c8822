#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "stratind/dsl.hpp"
#include "stratind/rng.hpp"

namespace stratind {

struct GrammarOptions {
    /// Number of actions in the task; `logit` is only admitted for two.
    int num_actions = 2;
    /// Restricts ActionDist productions to `action` and `argmax`.
    bool deterministic = false;
    /// Adds the Boolean input `prev_forced` (horizon task).
    bool forced_primitive = false;
    /// Largest integer literal the grammar generates.
    int literal_max = kMaxLiteral;
    double terminal_weight = 8.0;
    double nonterminal_weight = 1.0;
    /// Literal k has mass proportional to literal_ratio^k.
    double literal_ratio = 0.5;
    /// Primitives removed from every role. Used to build micro-grammars.
    std::vector<Op> excluded;
};

struct Production {
    Op op;
    double weight;
};

/// Role-indexed probabilistic grammar over the primitive set. Each
/// (ValueType, Role) nonterminal expands uniformly at random over its
/// productions, with terminals carrying `terminal_weight` and everything
/// else `nonterminal_weight`. Immutable after construction.
class Grammar {
public:
    explicit Grammar(GrammarOptions options = {});

    [[nodiscard]] const GrammarOptions& options() const noexcept { return options_; }
    [[nodiscard]] int num_actions() const noexcept { return options_.num_actions; }

    [[nodiscard]] std::span<const Production> productions(ValueType type, Role role) const;
    [[nodiscard]] double total_weight(ValueType type, Role role) const;

    /// Weight of `op` at its result type in `role`; 0 when not admitted.
    [[nodiscard]] double weight(Op op, Role role) const;
    [[nodiscard]] bool allows(Op op, Role role) const { return weight(op, role) > 0.0; }

    /// log(weight / total) for choosing `op` at its result type.
    [[nodiscard]] double production_log_prob(Op op, Role role) const;

    [[nodiscard]] double literal_log_prob(int value) const;
    [[nodiscard]] double literal_prob(int value) const;

    /// Productions at `type` with at least one argument of `type` itself.
    [[nodiscard]] std::span<const Production> wrappers(ValueType type, Role role) const;
    [[nodiscard]] double wrapper_weight(ValueType type, Role role) const;

    /// Draws a literal value from the literal law.
    int sample_literal(Rng& rng) const;

private:
    static std::size_t slot(ValueType type, Role role) {
        return static_cast<std::size_t>(type) * 4 + static_cast<std::size_t>(role);
    }

    GrammarOptions options_;
    std::array<std::vector<Production>, 16> table_;
    std::array<std::vector<Production>, 16> wrappers_;
    std::array<double, 16> totals_{};
    std::array<double, 16> wrapper_totals_{};
    std::vector<double> literal_log_probs_;
    std::vector<double> literal_cdf_;
};

/// Log generation probability of `e` starting from the nonterminal
/// (e.type(), role). Returns -inf if `e` uses a production the grammar does
/// not admit for that role.
double log_prob(const Expr& e, Role role, const Grammar& grammar);

/// Sum of log_prob over the four components.
double log_prior(const Strategy& s, const Grammar& grammar);

/// Throws ProgramError(Role) unless every component satisfies its role and
/// only uses productions the grammar admits.
void check_strategy(const Strategy& s, const Grammar& grammar);

struct SampleLimits {
    std::size_t max_depth = 32;
    std::size_t max_nodes = 4096;
};

/// One draw from the grammar, or nullopt if the draw exceeded `limits`.
/// When `log_prob_out` is given, the log-probabilities of the choices made
/// along the way are accumulated into it.
std::optional<Expr> try_sample_expr(const Grammar& grammar, Role role, ValueType type, Rng& rng,
                                    SampleLimits limits = {}, double* log_prob_out = nullptr);

/// Draws from the prior restricted to (type, role), resampling on cap.
Expr sample_expr(const Grammar& grammar, Role role, ValueType type, Rng& rng, SampleLimits limits = {});

/// Samples all four components from the prior.
Strategy sample_strategy(const Grammar& grammar, Rng& rng, SampleLimits limits = {});

} // namespace stratind
