#include "stratind/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace stratind {

namespace {

constexpr ValueType S = ValueType::Scalar;
constexpr ValueType B = ValueType::Boolean;
constexpr ValueType V = ValueType::Vector;
constexpr ValueType A = ValueType::ActionDist;

constexpr std::array<OpInfo, kOpCount> kOps{{
    {"lit", S, 0, {S, S, S, S}, false},
    {"+", S, 2, {S, S, S, S}, false},
    {"*", S, 2, {S, S, S, S}, false},
    {"-", S, 1, {S, S, S, S}, false},
    {"1/", S, 1, {S, S, S, S}, false},
    {"<", B, 2, {S, S, S, S}, false},
    {"==", B, 2, {S, S, S, S}, false},
    {"&&", B, 2, {B, B, S, S}, false},
    {"||", B, 2, {B, B, S, S}, false},
    {"!", B, 1, {B, S, S, S}, false},
    {"if", S, 3, {B, S, S, S}, false},
    {"if", B, 3, {B, B, B, S}, false},
    {"if", V, 3, {B, V, V, S}, false},
    {"vec_full", V, 1, {S, S, S, S}, false},
    {"vec_1", V, 1, {S, S, S, S}, false},
    {"vec_2", V, 2, {S, S, S, S}, false},
    {"vec_3", V, 3, {S, S, S, S}, false},
    {"vec_4", V, 4, {S, S, S, S}, false},
    {"idx", S, 2, {V, S, S, S}, false},
    {"assign", V, 3, {V, S, S, S}, false},
    {"add_assign", V, 3, {V, S, S, S}, false},
    {"prev_action", S, 0, {S, S, S, S}, true},
    {"reward", S, 0, {S, S, S, S}, true},
    {"state", V, 0, {S, S, S, S}, true},
    {"prev_forced", B, 0, {S, S, S, S}, true},
    {"logit", A, 1, {S, S, S, S}, false},
    {"softmax", A, 2, {S, V, S, S}, false},
    {"action", A, 1, {S, S, S, S}, false},
    {"argmax", A, 1, {V, S, S, S}, false},
}};

ValueType arg_type(Op op, std::size_t i) { return kOps[static_cast<std::size_t>(op)].args[i]; }

std::size_t arity_of(Op op) { return kOps[static_cast<std::size_t>(op)].arity; }

} // namespace

const OpInfo& op_info(Op op) { return kOps[static_cast<std::size_t>(op)]; }

std::string_view to_string(ValueType type) {
    switch (type) {
    case ValueType::Scalar: return "Scalar";
    case ValueType::Boolean: return "Boolean";
    case ValueType::Vector: return "Vector";
    case ValueType::ActionDist: return "ActionDist";
    }
    return "?";
}

std::string_view to_string(Role role) {
    switch (role) {
    case Role::InitMemory: return "m1";
    case Role::InitPolicy: return "q1";
    case Role::Update: return "f";
    case Role::Policy: return "g";
    }
    return "?";
}

ValueType root_type(Role role) {
    return (role == Role::InitMemory || role == Role::Update) ? ValueType::Vector : ValueType::ActionDist;
}

ProgramError::ProgramError(Kind kind, std::string message, std::size_t position)
    : std::runtime_error(position == npos ? message : message + " (at offset " + std::to_string(position) + ")"),
      kind_(kind), position_(position) {}

Expr Expr::literal(int value) {
    if (value < 0 || value > kMaxLiteral)
        throw ProgramError(ProgramError::Kind::LiteralRange,
                           "integer literal " + std::to_string(value) + " outside [0, 49]");
    return Expr(Op::Literal, value, {});
}

Expr Expr::make(Op op, std::vector<Expr> args) {
    if (op == Op::Literal) throw std::invalid_argument("use Expr::literal for integer literals");
    const OpInfo& info = op_info(op);
    if (args.size() != arity_of(op))
        throw ProgramError(ProgramError::Kind::Arity, std::string(info.name) + ": expected " +
                                                          std::to_string(arity_of(op)) + " arguments, got " +
                                                          std::to_string(args.size()));
    for (std::size_t i = 0; i < args.size(); ++i) {
        ValueType want = arg_type(op, i);
        if (args[i].type() != want)
            throw ProgramError(ProgramError::Kind::Type,
                               std::string(info.name) + ": argument " + std::to_string(i + 1) + " expected " +
                                   std::string(to_string(want)) + ", got " + std::string(to_string(args[i].type())));
    }
    return Expr(op, 0, std::move(args));
}

std::size_t Expr::size() const noexcept {
    std::size_t n = 1;
    for (const auto& a : args_) n += a.size();
    return n;
}

std::size_t Expr::depth() const noexcept {
    std::size_t d = 0;
    for (const auto& a : args_) d = std::max(d, a.depth());
    return d + 1;
}

bool operator==(const Expr& a, const Expr& b) noexcept {
    if (a.op_ != b.op_ || a.value_ != b.value_ || a.args_.size() != b.args_.size()) return false;
    for (std::size_t i = 0; i < a.args_.size(); ++i)
        if (!(a.args_[i] == b.args_[i])) return false;
    return true;
}

namespace {

const Expr* find_node(const Expr& e, std::size_t& remaining) {
    if (remaining == 0) return &e;
    --remaining;
    for (const auto& a : e.args()) {
        if (const Expr* hit = find_node(a, remaining)) return hit;
    }
    return nullptr;
}

Expr rebuild(const Expr& e, std::size_t& remaining, Expr& replacement, bool& done) {
    if (remaining == 0) {
        done = true;
        return std::move(replacement);
    }
    --remaining;
    if (e.args().empty()) return e;
    std::vector<Expr> args;
    args.reserve(e.args().size());
    for (const auto& a : e.args()) {
        if (done)
            args.push_back(a);
        else
            args.push_back(rebuild(a, remaining, replacement, done));
    }
    return Expr::make(e.op(), std::move(args));
}

void visit_nodes(const Expr& e, std::size_t& index, const std::function<void(std::size_t, const Expr&)>& visit) {
    visit(index++, e);
    for (const auto& a : e.args()) visit_nodes(a, index, visit);
}

} // namespace

const Expr& node_at(const Expr& root, std::size_t index) {
    std::size_t remaining = index;
    const Expr* hit = find_node(root, remaining);
    if (!hit) throw std::out_of_range("node index " + std::to_string(index) + " out of range");
    return *hit;
}

Expr replace_node(const Expr& root, std::size_t index, Expr replacement) {
    if (index >= root.size()) throw std::out_of_range("node index out of range");
    if (node_at(root, index).type() != replacement.type())
        throw ProgramError(ProgramError::Kind::Type, "replacement changes the node type");
    std::size_t remaining = index;
    bool done = false;
    return rebuild(root, remaining, replacement, done);
}

void for_each_node(const Expr& root, const std::function<void(std::size_t, const Expr&)>& visit) {
    std::size_t index = 0;
    visit_nodes(root, index, visit);
}

// ---------------------------------------------------------------------------
// Printing

namespace {

void print_to(const Expr& e, std::string& out) {
    if (e.op() == Op::Literal) {
        out += std::to_string(e.value());
        return;
    }
    const OpInfo& info = op_info(e.op());
    out += info.name;
    if (info.arity == 0) return;
    out += '(';
    for (std::size_t i = 0; i < e.args().size(); ++i) {
        if (i) out += ',';
        print_to(e.args()[i], out);
    }
    out += ')';
}

} // namespace

std::string print(const Expr& e) {
    std::string out;
    print_to(e, out);
    return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    Expr parse_all() {
        Expr e = parse_expr();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw ProgramError(ProgramError::Kind::Syntax, msg, pos_);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool peek(char c) {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == c;
    }

    void expect(char c) {
        if (!peek(c)) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    Expr build(Op op, std::vector<Expr> args, std::size_t at) {
        try {
            return Expr::make(op, std::move(args));
        } catch (const ProgramError& err) {
            throw ProgramError(err.kind(), err.what(), at);
        }
    }

    Expr parse_expr() {
        Expr e = parse_atom();
        while (peek('[')) {
            std::size_t at = pos_;
            ++pos_;
            Expr index = parse_expr();
            expect(']');
            e = build(Op::Index, {std::move(e), std::move(index)}, at);
        }
        return e;
    }

    std::vector<Expr> parse_args() {
        expect('(');
        std::vector<Expr> args;
        if (peek(')')) {
            ++pos_;
            return args;
        }
        for (;;) {
            args.push_back(parse_expr());
            if (peek(',')) {
                ++pos_;
                continue;
            }
            expect(')');
            return args;
        }
    }

    Expr parse_atom() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        std::size_t start = pos_;
        char c = text_[pos_];

        if (std::isdigit(static_cast<unsigned char>(c))) {
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            std::string_view digits = text_.substr(start, pos_ - start);
            // `1/(x)` is the multiplicative inverse.
            if (digits == "1" && pos_ < text_.size() && text_[pos_] == '/') {
                ++pos_;
                return build(Op::Inv, parse_args(), start);
            }
            if (digits.size() > 3) {
                throw ProgramError(ProgramError::Kind::LiteralRange,
                                   "integer literal " + std::string(digits) + " outside [0, 49]", start);
            }
            int value = std::stoi(std::string(digits));
            try {
                return Expr::literal(value);
            } catch (const ProgramError& err) {
                throw ProgramError(err.kind(), err.what(), start);
            }
        }

        std::string name;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            name = std::string(text_.substr(start, pos_ - start));
        } else {
            static constexpr std::array<std::string_view, 8> symbols{"==", "&&", "||", "+", "*", "-", "<", "!"};
            for (auto sym : symbols) {
                if (text_.substr(pos_, sym.size()) == sym) {
                    name = std::string(sym);
                    pos_ += sym.size();
                    break;
                }
            }
            if (name.empty()) fail(std::string("unexpected character '") + c + "'");
        }

        if (name == "prev_action" || name == "reward" || name == "state" || name == "prev_forced") {
            Op op = name == "prev_action" ? Op::PrevAction
                    : name == "reward"    ? Op::Reward
                    : name == "state"     ? Op::State
                                          : Op::PrevForced;
            return Expr::make(op);
        }

        if (name == "if") {
            std::vector<Expr> args = parse_args();
            if (args.size() != 3)
                throw ProgramError(ProgramError::Kind::Arity,
                                   "if: expected 3 arguments, got " + std::to_string(args.size()), start);
            Op op;
            switch (args[1].type()) {
            case ValueType::Scalar: op = Op::IfScalar; break;
            case ValueType::Boolean: op = Op::IfBoolean; break;
            case ValueType::Vector: op = Op::IfVector; break;
            default:
                throw ProgramError(ProgramError::Kind::Type, "if: branches cannot be ActionDist", start);
            }
            return build(op, std::move(args), start);
        }

        Op op = lookup(name, start);
        return build(op, parse_args(), start);
    }

    Op lookup(const std::string& name, std::size_t at) const {
        if (name == "inv") return Op::Inv;
        for (std::size_t i = 1; i < kOpCount; ++i) {
            auto op = static_cast<Op>(i);
            if (op == Op::IfBoolean || op == Op::IfVector) continue;
            if (op_info(op).arity > 0 && op_info(op).name == name) return op;
        }
        throw ProgramError(ProgramError::Kind::Syntax, "unknown primitive '" + name + "'", at);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

} // namespace

Expr parse(std::string_view text) { return Parser(text).parse_all(); }

// ---------------------------------------------------------------------------
// Strategies

const Expr& Strategy::component(Role role) const {
    switch (role) {
    case Role::InitMemory: return m1;
    case Role::InitPolicy: return q1;
    case Role::Update: return f;
    case Role::Policy: return g;
    }
    throw std::invalid_argument("bad role");
}

Expr& Strategy::component(Role role) {
    return const_cast<Expr&>(static_cast<const Strategy&>(*this).component(role));
}

void check_role(const Expr& e, Role role) {
    if (e.type() != root_type(role))
        throw ProgramError(ProgramError::Kind::Role, std::string(to_string(role)) + " must return " +
                                                         std::string(to_string(root_type(role))) + ", got " +
                                                         std::string(to_string(e.type())));
    if (!is_init_role(role)) return;
    for_each_node(e, [&](std::size_t, const Expr& n) {
        Op op = n.op();
        if (op_info(op).input || op == Op::Index || op == Op::IfScalar || op == Op::IfBoolean || op == Op::IfVector)
            throw ProgramError(ProgramError::Kind::Role, std::string(to_string(role)) + " may not use '" +
                                                             std::string(op_info(op).name) + "'");
    });
}

Strategy parse_strategy(std::string_view m1, std::string_view q1, std::string_view f, std::string_view g) {
    Strategy s{parse(m1), parse(q1), parse(f), parse(g)};
    for (Role r : kRoles) check_role(s.component(r), r);
    return s;
}

Strategy parse_strategy_listing(std::string_view listing) {
    std::array<std::string, 4> parts;
    std::array<bool, 4> seen{};
    int current = -1;
    std::istringstream in{std::string(listing)};
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto eq = line.find('=', first);
        int key = -1;
        if (eq != std::string::npos && (eq + 1 >= line.size() || line[eq + 1] != '=')) {
            std::string lhs = line.substr(first, eq - first);
            lhs.erase(lhs.find_last_not_of(" \t") + 1);
            if (lhs == "m_1" || lhs == "m1") key = 0;
            else if (lhs == "q_1" || lhs == "q1") key = 1;
            else if (lhs == "f") key = 2;
            else if (lhs == "g") key = 3;
        }
        if (key >= 0) {
            current = key;
            seen[key] = true;
            parts[key] = line.substr(eq + 1);
        } else {
            if (current < 0) throw ProgramError(ProgramError::Kind::Syntax, "listing must start with 'm_1 ='");
            parts[current] += line;
        }
    }
    static constexpr std::array<const char*, 4> names{"m_1", "q_1", "f", "g"};
    for (int i = 0; i < 4; ++i)
        if (!seen[i]) throw ProgramError(ProgramError::Kind::Syntax, std::string("listing is missing ") + names[i]);
    return parse_strategy(parts[0], parts[1], parts[2], parts[3]);
}

std::string print(const Strategy& s) {
    return print(s.m1) + ";" + print(s.q1) + ";" + print(s.f) + ";" + print(s.g);
}

} // namespace stratind
