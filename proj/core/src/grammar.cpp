#include "stratind/grammar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stratind {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool admitted(Op op, Role role, const GrammarOptions& opt) {
    if (std::find(opt.excluded.begin(), opt.excluded.end(), op) != opt.excluded.end()) return false;
    const OpInfo& info = op_info(op);
    if (is_init_role(role)) {
        if (info.input || op == Op::Index || op == Op::IfScalar || op == Op::IfBoolean || op == Op::IfVector)
            return false;
    }
    if (op == Op::PrevForced && !opt.forced_primitive) return false;
    if (op == Op::Logit && opt.num_actions != 2) return false;
    if (info.result == ValueType::ActionDist && opt.deterministic && op != Op::Action && op != Op::Argmax)
        return false;
    return true;
}

} // namespace

Grammar::Grammar(GrammarOptions options) : options_(std::move(options)) {
    if (options_.num_actions < 2 || options_.num_actions > kMemorySize)
        throw std::invalid_argument("num_actions must be in [2, 4]");
    if (options_.literal_max < 0 || options_.literal_max > kMaxLiteral)
        throw std::invalid_argument("literal_max must be in [0, 49]");
    if (!(options_.literal_ratio > 0.0)) throw std::invalid_argument("literal_ratio must be positive");

    for (Role role : kRoles) {
        for (std::size_t i = 0; i < kOpCount; ++i) {
            auto op = static_cast<Op>(i);
            if (!admitted(op, role, options_)) continue;
            const OpInfo& info = op_info(op);
            double w = info.arity == 0 ? options_.terminal_weight : options_.nonterminal_weight;
            std::size_t k = slot(info.result, role);
            table_[k].push_back({op, w});
            totals_[k] += w;
            auto args = info.arg_types();
            if (std::find(args.begin(), args.end(), info.result) != args.end()) {
                wrappers_[k].push_back({op, w});
                wrapper_totals_[k] += w;
            }
        }
    }

    double z = 0.0;
    for (int k = 0; k <= options_.literal_max; ++k) z += std::pow(options_.literal_ratio, k);
    double acc = 0.0;
    for (int k = 0; k <= options_.literal_max; ++k) {
        double p = std::pow(options_.literal_ratio, k) / z;
        literal_log_probs_.push_back(std::log(p));
        acc += p;
        literal_cdf_.push_back(acc);
    }
    literal_cdf_.back() = 1.0;
}

std::span<const Production> Grammar::productions(ValueType type, Role role) const { return table_[slot(type, role)]; }

double Grammar::total_weight(ValueType type, Role role) const { return totals_[slot(type, role)]; }

double Grammar::weight(Op op, Role role) const {
    for (const auto& p : table_[slot(op_info(op).result, role)])
        if (p.op == op) return p.weight;
    return 0.0;
}

double Grammar::production_log_prob(Op op, Role role) const {
    double w = weight(op, role);
    if (w <= 0.0) return kNegInf;
    return std::log(w / total_weight(op_info(op).result, role));
}

double Grammar::literal_log_prob(int value) const {
    if (value < 0 || value > options_.literal_max) return kNegInf;
    return literal_log_probs_[static_cast<std::size_t>(value)];
}

double Grammar::literal_prob(int value) const { return std::exp(literal_log_prob(value)); }

std::span<const Production> Grammar::wrappers(ValueType type, Role role) const {
    return wrappers_[slot(type, role)];
}

double Grammar::wrapper_weight(ValueType type, Role role) const { return wrapper_totals_[slot(type, role)]; }

int Grammar::sample_literal(Rng& rng) const {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    auto it = std::upper_bound(literal_cdf_.begin(), literal_cdf_.end(), u);
    if (it == literal_cdf_.end()) --it;
    return static_cast<int>(it - literal_cdf_.begin());
}

double log_prob(const Expr& e, Role role, const Grammar& grammar) {
    double lp = grammar.production_log_prob(e.op(), role);
    if (lp == kNegInf) return kNegInf;
    if (e.op() == Op::Literal) lp += grammar.literal_log_prob(e.value());
    for (const auto& a : e.args()) lp += log_prob(a, role, grammar);
    return lp;
}

double log_prior(const Strategy& s, const Grammar& grammar) {
    double lp = 0.0;
    for (Role r : kRoles) {
        const Expr& e = s.component(r);
        if (e.type() != root_type(r)) return kNegInf;
        lp += log_prob(e, r, grammar);
    }
    return lp;
}

void check_strategy(const Strategy& s, const Grammar& grammar) {
    for (Role r : kRoles) {
        const Expr& e = s.component(r);
        check_role(e, r);
        for_each_node(e, [&](std::size_t, const Expr& n) {
            if (!grammar.allows(n.op(), r))
                throw ProgramError(ProgramError::Kind::Role, std::string(to_string(r)) + ": primitive '" +
                                                                 std::string(op_info(n.op()).name) +
                                                                 "' is not available for this task/mode");
            if (n.op() == Op::Literal && n.value() > grammar.options().literal_max)
                throw ProgramError(ProgramError::Kind::LiteralRange, "literal exceeds grammar range");
        });
    }
}

namespace {

struct Sampler {
    const Grammar& grammar;
    Role role;
    Rng& rng;
    SampleLimits limits;
    double* log_prob_out;
    std::size_t nodes = 0;

    std::optional<Expr> draw(ValueType type, std::size_t depth) {
        if (depth > limits.max_depth || ++nodes > limits.max_nodes) return std::nullopt;
        auto prods = grammar.productions(type, role);
        if (prods.empty()) throw std::logic_error("no productions for nonterminal");
        double total = grammar.total_weight(type, role);
        double u = std::uniform_real_distribution<double>(0.0, total)(rng);
        const Production* chosen = &prods.back();
        for (const auto& p : prods) {
            if (u < p.weight) {
                chosen = &p;
                break;
            }
            u -= p.weight;
        }
        if (log_prob_out) *log_prob_out += std::log(chosen->weight / total);
        if (chosen->op == Op::Literal) {
            int k = grammar.sample_literal(rng);
            if (log_prob_out) *log_prob_out += grammar.literal_log_prob(k);
            return Expr::literal(k);
        }
        const OpInfo& info = op_info(chosen->op);
        std::vector<Expr> args;
        args.reserve(info.arity);
        for (ValueType t : info.arg_types()) {
            auto child = draw(t, depth + 1);
            if (!child) return std::nullopt;
            args.push_back(std::move(*child));
        }
        return Expr::make(chosen->op, std::move(args));
    }
};

} // namespace

std::optional<Expr> try_sample_expr(const Grammar& grammar, Role role, ValueType type, Rng& rng, SampleLimits limits,
                                    double* log_prob_out) {
    Sampler sampler{grammar, role, rng, limits, log_prob_out};
    return sampler.draw(type, 1);
}

Expr sample_expr(const Grammar& grammar, Role role, ValueType type, Rng& rng, SampleLimits limits) {
    for (;;) {
        if (auto e = try_sample_expr(grammar, role, type, rng, limits)) return std::move(*e);
    }
}

Strategy sample_strategy(const Grammar& grammar, Rng& rng, SampleLimits limits) {
    Expr m1 = sample_expr(grammar, Role::InitMemory, ValueType::Vector, rng, limits);
    Expr q1 = sample_expr(grammar, Role::InitPolicy, ValueType::ActionDist, rng, limits);
    Expr f = sample_expr(grammar, Role::Update, ValueType::Vector, rng, limits);
    Expr g = sample_expr(grammar, Role::Policy, ValueType::ActionDist, rng, limits);
    return Strategy{std::move(m1), std::move(q1), std::move(f), std::move(g)};
}

} // namespace stratind
