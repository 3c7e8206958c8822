#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <variant>

#include "stratind/dsl.hpp"

namespace stratind {

/// Agent memory m_t.
using AgentState = std::array<double, kMemorySize>;

/// Inputs visible to f and g on a step. `state` is m_t for f and m_{t+1}
/// for g.
struct StepContext {
    AgentState state{};
    int prev_action = 0;
    double reward = 0.0;
    bool prev_forced = false;
};

/// Why a program could not be evaluated. Any fault makes the strategy's
/// value -inf.
enum class Fault : std::uint8_t {
    None,
    NonIntegral,
    OutOfBounds,
    DivisionByZero,
    /// A NaN or infinity reached an index, an action or a distribution.
    NonFinite,
};

std::string_view to_string(Fault fault);

/// Tolerance for treating a real as an integer index or action.
inline constexpr double kIntegralTolerance = 1e-9;

class ActionDistribution {
public:
    ActionDistribution() = default;
    explicit ActionDistribution(int num_actions) : num_actions_(num_actions) {}

    static ActionDistribution point_mass(int num_actions, int action);

    [[nodiscard]] int num_actions() const noexcept { return num_actions_; }
    [[nodiscard]] double operator[](int a) const { return probs_[static_cast<std::size_t>(a)]; }
    double& operator[](int a) { return probs_[static_cast<std::size_t>(a)]; }
    [[nodiscard]] const std::array<double, kMemorySize>& probs() const noexcept { return probs_; }

    /// The action if all mass sits on one action.
    [[nodiscard]] std::optional<int> deterministic_action() const;

    /// Inverse-CDF draw from a uniform u in [0, 1).
    [[nodiscard]] int sample(double u) const;

    friend bool operator==(const ActionDistribution&, const ActionDistribution&) = default;

private:
    int num_actions_ = 0;
    std::array<double, kMemorySize> probs_{};
};

using Value = std::variant<double, bool, AgentState, ActionDistribution>;

class EvalResult {
public:
    EvalResult(Value v) : value_(std::move(v)) {}
    EvalResult(Fault f) : fault_(f) {}

    [[nodiscard]] bool ok() const noexcept { return fault_ == Fault::None; }
    [[nodiscard]] Fault fault() const noexcept { return fault_; }
    [[nodiscard]] const Value& value() const { return value_; }

    template <typename T>
    [[nodiscard]] const T& get() const {
        return std::get<T>(value_);
    }

private:
    Value value_{0.0};
    Fault fault_ = Fault::None;
};

/// Evaluates a well-typed expression. Pure: assign and add_assign return
/// updated copies.
EvalResult eval_expr(const Expr& e, const StepContext& ctx, int num_actions);

struct StepOutcome {
    AgentState memory{};
    ActionDistribution policy;
    Fault fault = Fault::None;

    [[nodiscard]] bool ok() const noexcept { return fault == Fault::None; }
};

/// Evaluates m1 and q1.
StepOutcome init_strategy(const Strategy& s, int num_actions);

/// m_{t+1} = f(ctx), then the policy g with state := m_{t+1} and the same
/// previous action and reward.
StepOutcome step_strategy(const Strategy& s, const StepContext& ctx, int num_actions);

} // namespace stratind
