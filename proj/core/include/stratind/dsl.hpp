#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stratind {

inline constexpr int kMemorySize = 4;
inline constexpr int kMaxLiteral = 49;

enum class ValueType : std::uint8_t { Scalar, Boolean, Vector, ActionDist };
inline constexpr std::size_t kValueTypeCount = 4;

/// Which component of a strategy a program fills.
enum class Role : std::uint8_t { InitMemory, InitPolicy, Update, Policy };
inline constexpr std::array<Role, 4> kRoles{Role::InitMemory, Role::InitPolicy, Role::Update, Role::Policy};

/// Primitive heads. `if` is split per branch type; all three print as `if`.
enum class Op : std::uint8_t {
    Literal,
    Add,
    Mul,
    Neg,
    Inv,
    Less,
    Equal,
    And,
    Or,
    Not,
    IfScalar,
    IfBoolean,
    IfVector,
    VecFull,
    Vec1,
    Vec2,
    Vec3,
    Vec4,
    Index,
    Assign,
    AddAssign,
    PrevAction,
    Reward,
    State,
    PrevForced,
    Logit,
    Softmax,
    Action,
    Argmax,
};
inline constexpr std::size_t kOpCount = static_cast<std::size_t>(Op::Argmax) + 1;

struct OpInfo {
    std::string_view name;
    ValueType result;
    std::uint8_t arity;
    std::array<ValueType, 4> args;
    /// Reads a per-step input (prev_action, reward, state, prev_forced).
    bool input;

    [[nodiscard]] std::span<const ValueType> arg_types() const { return {args.data(), arity}; }
};

const OpInfo& op_info(Op op);
std::string_view to_string(ValueType type);
std::string_view to_string(Role role);

/// Root type a program must have to fill `role`.
ValueType root_type(Role role);

/// True for roles computing starting values (m1, q1); these exclude
/// conditionals, indexing and inputs.
constexpr bool is_init_role(Role role) { return role == Role::InitMemory || role == Role::InitPolicy; }

/// Raised for malformed program text or ill-typed construction.
class ProgramError : public std::runtime_error {
public:
    enum class Kind { Syntax, Type, Arity, LiteralRange, Role };
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    ProgramError(Kind kind, std::string message, std::size_t position = npos);

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    /// Byte offset into the parsed text, or npos.
    [[nodiscard]] std::size_t position() const noexcept { return position_; }

private:
    Kind kind_;
    std::size_t position_;
};

/// Immutable typed syntax tree. Construction checks arity, argument types
/// and literal range, so every Expr in existence is well typed.
class Expr {
public:
    /// The literal 0.
    Expr() : op_(Op::Literal) {}
    static Expr literal(int value);
    static Expr make(Op op, std::vector<Expr> args = {});

    [[nodiscard]] Op op() const noexcept { return op_; }
    [[nodiscard]] int value() const noexcept { return value_; }
    [[nodiscard]] const std::vector<Expr>& args() const noexcept { return args_; }
    [[nodiscard]] const Expr& arg(std::size_t i) const { return args_.at(i); }
    [[nodiscard]] ValueType type() const noexcept { return op_info(op_).result; }

    /// Number of nodes.
    [[nodiscard]] std::size_t size() const noexcept;
    [[nodiscard]] std::size_t depth() const noexcept;

    friend bool operator==(const Expr& a, const Expr& b) noexcept;

private:
    Expr(Op op, int value, std::vector<Expr> args) : op_(op), value_(value), args_(std::move(args)) {}

    Op op_;
    int value_ = 0;
    std::vector<Expr> args_;
};

/// Node at `index` in preorder (root is 0).
const Expr& node_at(const Expr& root, std::size_t index);

/// Copy of `root` with the preorder node `index` replaced.
Expr replace_node(const Expr& root, std::size_t index, Expr replacement);

/// Visits every node in preorder as (index, node).
void for_each_node(const Expr& root, const std::function<void(std::size_t, const Expr&)>& visit);

Expr parse(std::string_view text);
std::string print(const Expr& e);

struct Strategy {
    Expr m1;
    Expr q1;
    Expr f;
    Expr g;

    [[nodiscard]] const Expr& component(Role role) const;
    Expr& component(Role role);

    friend bool operator==(const Strategy&, const Strategy&) = default;
};

/// Builds a strategy from the four program texts and checks root types.
Strategy parse_strategy(std::string_view m1, std::string_view q1, std::string_view f, std::string_view g);

/// Reads the listing form: `m_1 = ...`, `q_1 = ...`, `f = ...`, `g = ...`,
/// each program possibly spanning several lines.
Strategy parse_strategy_listing(std::string_view listing);

/// Canonical single-line key: `m1;q1;f;g`.
std::string print(const Strategy& s);

/// Throws ProgramError(Role) unless the root type fits the role and init
/// roles avoid conditionals, indexing and inputs.
void check_role(const Expr& e, Role role);

} // namespace stratind
