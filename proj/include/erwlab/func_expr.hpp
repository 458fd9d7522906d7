#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace erwlab {

enum class NodeKind : std::uint8_t {
    Const,
    Var,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Call,
    Less,
    LessEq,
    Greater,
    GreaterEq,
    And,
    Piecewise,
};

enum class Builtin : std::uint8_t { Abs, Sgn, Min, Max, Sqrt, Sin, Tanh, Exp, Log };

struct ExprNode {
    NodeKind kind = NodeKind::Const;
    Builtin fn = Builtin::Abs;
    int var = 0;          // zero-based variable index
    double value = 0.0;   // constant payload
    int a = -1, b = -1;   // operands of unary/binary nodes
    int first = 0;        // Call / Piecewise children live in a side array
    int count = 0;
};

/// Immutable parsed expression over x (arity 1) or x1..xs.
/// Copies share the same tree, so passing by value is cheap.
class FuncExpr {
public:
    FuncExpr() = default;

    /// Throws Error{SyntaxError|UnknownIdentifier|ArityMismatch}.
    static FuncExpr parse(std::string_view text, int arity = 1);

    int arity() const;
    bool empty() const { return !tree_; }

    /// Throws Error{DomainError|DivisionByZero|ArityMismatch}.
    double eval(std::span<const double> x) const;
    double operator()(double x) const;

    /// Canonical text; parse(to_string()) is structurally identical to *this.
    std::string to_string() const;

    bool structurally_equal(const FuncExpr& other) const;

    /// Renames variable i to var_map[i] in a new arity.
    FuncExpr rebind(int new_arity, const std::vector<int>& var_map) const;

    /// Substitutes args[i] for variable i; all args must share one arity.
    FuncExpr compose(const std::vector<FuncExpr>& args) const;

    static FuncExpr variable(int index, int arity);
    static FuncExpr constant(double value, int arity = 1);

    /// Indices of variables that occur in the tree.
    std::vector<int> free_variables() const;

    struct Tree;

private:
    explicit FuncExpr(std::shared_ptr<const Tree> t) : tree_(std::move(t)) {}
    std::shared_ptr<const Tree> tree_;
};

struct Derivative {
    double value = 0.0;
    double error = 0.0;
};

/// Derivative of a scalar callable by central differences with Richardson
/// extrapolation on h_k = 1e-2 * 2^-k, k = 0..6. Order 1..6.
/// Throws Error{NonsmoothAtPoint|OrderUnsupported}.
Derivative derive_callable(const std::function<double(double)>& f, double x0, int order);

/// Scalar derivative of an arity-1 expression.
Derivative derive_at(const FuncExpr& expr, double x0, int order);

/// First-order partial derivatives of an arity-s expression.
std::vector<Derivative> gradient_at(const FuncExpr& expr, std::span<const double> x0);

}  // namespace erwlab
