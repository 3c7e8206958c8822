#include "stratind/interp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stratind {

std::string_view to_string(Fault fault) {
    switch (fault) {
    case Fault::None: return "none";
    case Fault::NonIntegral: return "non-integral action/index";
    case Fault::OutOfBounds: return "out-of-bounds action/index";
    case Fault::DivisionByZero: return "division by zero";
    case Fault::NonFinite: return "non-finite value";
    }
    return "?";
}

ActionDistribution ActionDistribution::point_mass(int num_actions, int action) {
    ActionDistribution d(num_actions);
    d[action] = 1.0;
    return d;
}

std::optional<int> ActionDistribution::deterministic_action() const {
    for (int a = 0; a < num_actions_; ++a)
        if (probs_[static_cast<std::size_t>(a)] == 1.0) return a;
    return std::nullopt;
}

int ActionDistribution::sample(double u) const {
    double acc = 0.0;
    int last = 0;
    for (int a = 0; a < num_actions_; ++a) {
        double p = probs_[static_cast<std::size_t>(a)];
        if (p <= 0.0) continue;
        last = a;
        acc += p;
        if (u < acc) return a;
    }
    return last;
}

namespace {

class Evaluator {
public:
    Evaluator(const StepContext& ctx, int num_actions) : ctx_(ctx), n_(num_actions) {}

    Fault fault = Fault::None;

    double scalar(const Expr& e) {
        const auto& a = e.args();
        switch (e.op()) {
        case Op::Literal: return e.value();
        case Op::Add: {
            double x = scalar(a[0]);
            if (fault != Fault::None) return 0.0;
            return x + scalar(a[1]);
        }
        case Op::Mul: {
            double x = scalar(a[0]);
            if (fault != Fault::None) return 0.0;
            return x * scalar(a[1]);
        }
        case Op::Neg: return -scalar(a[0]);
        case Op::Inv: {
            double x = scalar(a[0]);
            if (fault != Fault::None) return 0.0;
            if (x == 0.0) {
                fault = Fault::DivisionByZero;
                return 0.0;
            }
            return 1.0 / x;
        }
        case Op::IfScalar: {
            bool c = boolean(a[0]);
            if (fault != Fault::None) return 0.0;
            return c ? scalar(a[1]) : scalar(a[2]);
        }
        case Op::Index: {
            AgentState v = vector(a[0]);
            if (fault != Fault::None) return 0.0;
            int i = index(scalar(a[1]), kMemorySize);
            if (fault != Fault::None) return 0.0;
            return v[static_cast<std::size_t>(i)];
        }
        case Op::PrevAction: return ctx_.prev_action;
        case Op::Reward: return ctx_.reward;
        default: break;
        }
        throw std::logic_error("scalar evaluation of non-scalar node");
    }

    bool boolean(const Expr& e) {
        const auto& a = e.args();
        switch (e.op()) {
        case Op::Less: {
            double x = scalar(a[0]);
            if (fault != Fault::None) return false;
            return x < scalar(a[1]);
        }
        case Op::Equal: {
            double x = scalar(a[0]);
            if (fault != Fault::None) return false;
            return x == scalar(a[1]);
        }
        case Op::And: {
            bool x = boolean(a[0]);
            if (fault != Fault::None || !x) return false;
            return boolean(a[1]);
        }
        case Op::Or: {
            bool x = boolean(a[0]);
            if (fault != Fault::None) return false;
            if (x) return true;
            return boolean(a[1]);
        }
        case Op::Not: return !boolean(a[0]);
        case Op::IfBoolean: {
            bool c = boolean(a[0]);
            if (fault != Fault::None) return false;
            return c ? boolean(a[1]) : boolean(a[2]);
        }
        case Op::PrevForced: return ctx_.prev_forced;
        default: break;
        }
        throw std::logic_error("boolean evaluation of non-boolean node");
    }

    AgentState vector(const Expr& e) {
        const auto& a = e.args();
        AgentState out{};
        switch (e.op()) {
        case Op::VecFull: {
            double x = scalar(a[0]);
            out.fill(x);
            return out;
        }
        case Op::Vec1:
        case Op::Vec2:
        case Op::Vec3:
        case Op::Vec4:
            for (std::size_t i = 0; i < a.size(); ++i) {
                out[i] = scalar(a[i]);
                if (fault != Fault::None) return out;
            }
            return out;
        case Op::Assign:
        case Op::AddAssign: {
            out = vector(a[0]);
            if (fault != Fault::None) return out;
            int i = index(scalar(a[1]), kMemorySize);
            if (fault != Fault::None) return out;
            double x = scalar(a[2]);
            if (fault != Fault::None) return out;
            auto& slot = out[static_cast<std::size_t>(i)];
            slot = e.op() == Op::Assign ? x : slot + x;
            return out;
        }
        case Op::IfVector: {
            bool c = boolean(a[0]);
            if (fault != Fault::None) return out;
            return c ? vector(a[1]) : vector(a[2]);
        }
        case Op::State: return ctx_.state;
        default: break;
        }
        throw std::logic_error("vector evaluation of non-vector node");
    }

    ActionDistribution dist(const Expr& e) {
        const auto& a = e.args();
        ActionDistribution d(n_);
        switch (e.op()) {
        case Op::Logit: {
            double l = scalar(a[0]);
            if (fault != Fault::None) return d;
            if (std::isnan(l)) {
                fault = Fault::NonFinite;
                return d;
            }
            // p(a=0) = sigmoid(l), computed without overflow.
            double p0 = l >= 0 ? 1.0 / (1.0 + std::exp(-l)) : std::exp(l) / (1.0 + std::exp(l));
            d[0] = p0;
            d[1] = 1.0 - p0;
            return d;
        }
        case Op::Softmax: {
            double w = scalar(a[0]);
            if (fault != Fault::None) return d;
            AgentState v = vector(a[1]);
            if (fault != Fault::None) return d;
            return softmax(w, v);
        }
        case Op::Action: {
            int act = index(scalar(a[0]), n_);
            if (fault != Fault::None) return d;
            d[act] = 1.0;
            return d;
        }
        case Op::Argmax: {
            AgentState v = vector(a[0]);
            if (fault != Fault::None) return d;
            int best = 0;
            for (int i = 0; i < n_; ++i) {
                double x = v[static_cast<std::size_t>(i)];
                if (std::isnan(x)) {
                    fault = Fault::NonFinite;
                    return d;
                }
                if (x > v[static_cast<std::size_t>(best)]) best = i;
            }
            d[best] = 1.0;
            return d;
        }
        default: break;
        }
        throw std::logic_error("distribution evaluation of non-distribution node");
    }

private:
    int index(double x, int bound) {
        if (fault != Fault::None) return 0;
        if (!std::isfinite(x)) {
            fault = Fault::NonFinite;
            return 0;
        }
        double r = std::round(x);
        if (std::abs(x - r) > kIntegralTolerance) {
            fault = Fault::NonIntegral;
            return 0;
        }
        if (r < 0.0 || r >= bound) {
            fault = Fault::OutOfBounds;
            return 0;
        }
        return static_cast<int>(r);
    }

    // Probabilities proportional to exp(w * v_i) over the first n_ entries,
    // computed from max-shifted exponents.
    ActionDistribution softmax(double w, const AgentState& v) {
        ActionDistribution d(n_);
        std::array<double, kMemorySize> logits{};
        double top = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n_; ++i) {
            double l = w * v[static_cast<std::size_t>(i)];
            if (std::isnan(l)) {
                fault = Fault::NonFinite;
                return d;
            }
            logits[static_cast<std::size_t>(i)] = l;
            top = std::max(top, l);
        }
        if (std::isinf(top)) {
            // All mass on the entries tied at the (infinite) maximum.
            int count = 0;
            for (int i = 0; i < n_; ++i) count += logits[static_cast<std::size_t>(i)] == top;
            for (int i = 0; i < n_; ++i) d[i] = logits[static_cast<std::size_t>(i)] == top ? 1.0 / count : 0.0;
            return d;
        }
        double z = 0.0;
        for (int i = 0; i < n_; ++i) {
            double p = std::exp(logits[static_cast<std::size_t>(i)] - top);
            d[i] = p;
            z += p;
        }
        for (int i = 0; i < n_; ++i) d[i] /= z;
        return d;
    }

    const StepContext& ctx_;
    int n_;
};

} // namespace

EvalResult eval_expr(const Expr& e, const StepContext& ctx, int num_actions) {
    Evaluator ev(ctx, num_actions);
    Value v;
    switch (e.type()) {
    case ValueType::Scalar: v = ev.scalar(e); break;
    case ValueType::Boolean: v = ev.boolean(e); break;
    case ValueType::Vector: v = ev.vector(e); break;
    case ValueType::ActionDist: v = ev.dist(e); break;
    }
    if (ev.fault != Fault::None) return ev.fault;
    return v;
}

StepOutcome init_strategy(const Strategy& s, int num_actions) {
    StepOutcome out;
    StepContext empty;
    Evaluator ev(empty, num_actions);
    out.memory = ev.vector(s.m1);
    if (ev.fault == Fault::None) out.policy = ev.dist(s.q1);
    out.fault = ev.fault;
    return out;
}

StepOutcome step_strategy(const Strategy& s, const StepContext& ctx, int num_actions) {
    StepOutcome out;
    {
        Evaluator ev(ctx, num_actions);
        out.memory = ev.vector(s.f);
        out.fault = ev.fault;
        if (!out.ok()) return out;
    }
    StepContext next = ctx;
    next.state = out.memory;
    Evaluator ev(next, num_actions);
    out.policy = ev.dist(s.g);
    out.fault = ev.fault;
    return out;
}

} // namespace stratind
