#include "erwlab/func_expr.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <set>

#include "erwlab/error.hpp"

namespace erwlab {

struct FuncExpr::Tree {
    std::vector<ExprNode> nodes;
    std::vector<int> kids;
    int root = -1;
    int arity = 1;
};

namespace {

using Tree = FuncExpr::Tree;

struct BuiltinInfo {
    const char* name;
    Builtin fn;
    int args;
};

constexpr std::array<BuiltinInfo, 9> kBuiltins{{
    {"abs", Builtin::Abs, 1},
    {"sgn", Builtin::Sgn, 1},
    {"min", Builtin::Min, 2},
    {"max", Builtin::Max, 2},
    {"sqrt", Builtin::Sqrt, 1},
    {"sin", Builtin::Sin, 1},
    {"tanh", Builtin::Tanh, 1},
    {"exp", Builtin::Exp, 1},
    {"log", Builtin::Log, 1},
}};

const char* builtin_name(Builtin fn) {
    for (const auto& b : kBuiltins)
        if (b.fn == fn) return b.name;
    return "?";
}

// ---------------------------------------------------------------- parser

class Parser {
public:
    Parser(std::string_view text, int arity) : text_(text), tree_(std::make_shared<Tree>()) {
        tree_->arity = arity;
    }

    std::shared_ptr<Tree> run() {
        skip_ws();
        if (pos_ >= text_.size()) fail("empty expression");
        tree_->root = parse_sum();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return tree_;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw Error(ErrorCode::SyntaxError, msg + " at offset " + std::to_string(pos_));
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(std::string_view tok) {
        skip_ws();
        if (text_.substr(pos_, tok.size()) == tok) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }

    void expect(std::string_view tok) {
        if (!accept(tok)) fail("expected '" + std::string(tok) + "'");
    }

    int add(ExprNode n) {
        tree_->nodes.push_back(n);
        return static_cast<int>(tree_->nodes.size()) - 1;
    }

    int binary(NodeKind k, int a, int b) {
        ExprNode n;
        n.kind = k;
        n.a = a;
        n.b = b;
        return add(n);
    }

    int with_children(NodeKind k, Builtin fn, const std::vector<int>& ch) {
        ExprNode n;
        n.kind = k;
        n.fn = fn;
        n.first = static_cast<int>(tree_->kids.size());
        n.count = static_cast<int>(ch.size());
        tree_->kids.insert(tree_->kids.end(), ch.begin(), ch.end());
        return add(n);
    }

    int negate(int a) {
        ExprNode& inner = tree_->nodes[a];
        if (inner.kind == NodeKind::Const) {
            inner.value = -inner.value;
            return a;
        }
        ExprNode n;
        n.kind = NodeKind::Neg;
        n.a = a;
        return add(n);
    }

    int parse_sum() {
        int lhs = parse_product();
        for (;;) {
            if (accept("+")) lhs = binary(NodeKind::Add, lhs, parse_product());
            else if (accept("-")) lhs = binary(NodeKind::Sub, lhs, parse_product());
            else return lhs;
        }
    }

    int parse_product() {
        int lhs = parse_unary();
        for (;;) {
            if (accept("*")) lhs = binary(NodeKind::Mul, lhs, parse_unary());
            else if (accept("/")) lhs = binary(NodeKind::Div, lhs, parse_unary());
            else return lhs;
        }
    }

    int parse_unary() {
        if (accept("-")) return negate(parse_unary());
        if (accept("+")) return parse_unary();
        return parse_power();
    }

    int parse_power() {
        int lhs = parse_primary();
        while (accept("^")) lhs = binary(NodeKind::Pow, lhs, parse_exponent());
        return lhs;
    }

    int parse_exponent() {
        if (accept("-")) return negate(parse_exponent());
        if (accept("+")) return parse_exponent();
        return parse_primary();
    }

    int parse_number() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
            ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
            if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
                pos_ = p;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            }
        }
        double v = 0.0;
        auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
        if (res.ec != std::errc() || res.ptr != text_.data() + pos_) {
            pos_ = start;
            fail("malformed number");
        }
        ExprNode n;
        n.kind = NodeKind::Const;
        n.value = v;
        return add(n);
    }

    int parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (c == '(') {
            ++pos_;
            int e = parse_sum();
            expect(")");
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            const std::string_view id = text_.substr(start, pos_ - start);
            return parse_identifier(id, start);
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    int parse_identifier(std::string_view id, std::size_t start) {
        if (id == "piecewise") return parse_piecewise();
        for (const auto& b : kBuiltins) {
            if (id != b.name) continue;
            expect("(");
            std::vector<int> args{parse_sum()};
            while (accept(",")) args.push_back(parse_sum());
            expect(")");
            if (static_cast<int>(args.size()) != b.args)
                throw Error(ErrorCode::ArityMismatch, std::string(b.name) + " takes " +
                                                          std::to_string(b.args) + " argument(s)");
            return with_children(NodeKind::Call, b.fn, args);
        }
        if (id == "pi") {
            ExprNode n;
            n.kind = NodeKind::Const;
            n.value = 3.14159265358979323846;
            return add(n);
        }
        int var = -1;
        if (id == "x") {
            if (tree_->arity != 1)
                throw Error(ErrorCode::ArityMismatch, "bare 'x' requires arity 1; use x1..x" +
                                                          std::to_string(tree_->arity));
            var = 0;
        } else if (id.size() > 1 && id[0] == 'x') {
            int k = 0;
            auto res = std::from_chars(id.data() + 1, id.data() + id.size(), k);
            if (res.ec == std::errc() && res.ptr == id.data() + id.size() && id[1] != '0') {
                if (k < 1 || k > tree_->arity)
                    throw Error(ErrorCode::ArityMismatch, std::string(id) + " exceeds arity " +
                                                              std::to_string(tree_->arity));
                var = k - 1;
            }
        }
        if (var < 0)
            throw Error(ErrorCode::UnknownIdentifier,
                        "'" + std::string(id) + "' at offset " + std::to_string(start));
        ExprNode n;
        n.kind = NodeKind::Var;
        n.var = var;
        return add(n);
    }

    int parse_comparison_chain() {
        int lhs = parse_sum();
        int result = -1;
        for (;;) {
            NodeKind k;
            if (accept("<=")) k = NodeKind::LessEq;
            else if (accept(">=")) k = NodeKind::GreaterEq;
            else if (accept("<")) k = NodeKind::Less;
            else if (accept(">")) k = NodeKind::Greater;
            else break;
            int rhs = parse_sum();
            int cmp = binary(k, lhs, rhs);
            result = result < 0 ? cmp : binary(NodeKind::And, result, cmp);
            lhs = rhs;
        }
        if (result < 0) fail("expected comparison in piecewise condition");
        return result;
    }

    void collect_vars(int i, std::set<int>& out) const {
        const ExprNode& n = tree_->nodes[i];
        if (n.kind == NodeKind::Var) out.insert(n.var);
        if (n.a >= 0) collect_vars(n.a, out);
        if (n.b >= 0) collect_vars(n.b, out);
        for (int c = 0; c < n.count; ++c) collect_vars(tree_->kids[n.first + c], out);
    }

    int parse_piecewise() {
        expect("(");
        std::vector<int> ch;
        do {
            const std::size_t cond_pos = pos_;
            int cond = parse_comparison_chain();
            while (accept("&&")) cond = binary(NodeKind::And, cond, parse_comparison_chain());
            std::set<int> vars;
            collect_vars(cond, vars);
            if (vars.size() > 1) {
                pos_ = cond_pos;
                fail("piecewise condition must involve a single variable");
            }
            expect(":");
            ch.push_back(cond);
            ch.push_back(parse_sum());
        } while (accept(";"));
        expect(")");
        return with_children(NodeKind::Piecewise, Builtin::Abs, ch);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::shared_ptr<Tree> tree_;
};

// ---------------------------------------------------------------- evaluation

double ipow(double base, long e) {
    bool inv = e < 0;
    unsigned long k = static_cast<unsigned long>(inv ? -e : e);
    double r = 1.0;
    while (k) {
        if (k & 1UL) r *= base;
        base *= base;
        k >>= 1;
    }
    return inv ? 1.0 / r : r;
}

double eval_node(const Tree& t, int i, const double* x) {
    const ExprNode& n = t.nodes[i];
    switch (n.kind) {
        case NodeKind::Const: return n.value;
        case NodeKind::Var: return x[n.var];
        case NodeKind::Neg: return -eval_node(t, n.a, x);
        case NodeKind::Add: return eval_node(t, n.a, x) + eval_node(t, n.b, x);
        case NodeKind::Sub: return eval_node(t, n.a, x) - eval_node(t, n.b, x);
        case NodeKind::Mul: return eval_node(t, n.a, x) * eval_node(t, n.b, x);
        case NodeKind::Div: {
            const double num = eval_node(t, n.a, x);
            const double den = eval_node(t, n.b, x);
            if (den == 0.0) throw Error(ErrorCode::DivisionByZero, "division by zero");
            return num / den;
        }
        case NodeKind::Pow: {
            const double base = eval_node(t, n.a, x);
            const double e = eval_node(t, n.b, x);
            if (e == std::floor(e) && std::fabs(e) <= 64.0) {
                if (base == 0.0 && e < 0.0) throw Error(ErrorCode::DivisionByZero, "0 to a negative power");
                return ipow(base, static_cast<long>(e));
            }
            if (base < 0.0) throw Error(ErrorCode::DomainError, "negative base with real exponent");
            if (base == 0.0 && e < 0.0) throw Error(ErrorCode::DivisionByZero, "0 to a negative power");
            return std::pow(base, e);
        }
        case NodeKind::Call: {
            const int* k = t.kids.data() + n.first;
            const double u = eval_node(t, k[0], x);
            switch (n.fn) {
                case Builtin::Abs: return std::fabs(u);
                case Builtin::Sgn: return u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0);
                case Builtin::Min: return std::min(u, eval_node(t, k[1], x));
                case Builtin::Max: return std::max(u, eval_node(t, k[1], x));
                case Builtin::Sqrt:
                    if (u < 0.0) throw Error(ErrorCode::DomainError, "sqrt of negative value");
                    return std::sqrt(u);
                case Builtin::Sin: return std::sin(u);
                case Builtin::Tanh: return std::tanh(u);
                case Builtin::Exp: return std::exp(u);
                case Builtin::Log:
                    if (u <= 0.0) throw Error(ErrorCode::DomainError, "log of non-positive value");
                    return std::log(u);
            }
            return 0.0;
        }
        case NodeKind::Less: return eval_node(t, n.a, x) < eval_node(t, n.b, x) ? 1.0 : 0.0;
        case NodeKind::LessEq: return eval_node(t, n.a, x) <= eval_node(t, n.b, x) ? 1.0 : 0.0;
        case NodeKind::Greater: return eval_node(t, n.a, x) > eval_node(t, n.b, x) ? 1.0 : 0.0;
        case NodeKind::GreaterEq: return eval_node(t, n.a, x) >= eval_node(t, n.b, x) ? 1.0 : 0.0;
        case NodeKind::And: return (eval_node(t, n.a, x) != 0.0 && eval_node(t, n.b, x) != 0.0) ? 1.0 : 0.0;
        case NodeKind::Piecewise: {
            const int* k = t.kids.data() + n.first;
            for (int c = 0; c + 1 < n.count; c += 2)
                if (eval_node(t, k[c], x) != 0.0) return eval_node(t, k[c + 1], x);
            throw Error(ErrorCode::DomainError, "point outside every piecewise branch");
        }
    }
    return 0.0;
}

// ---------------------------------------------------------------- printing

std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, res.ptr);
    if (v < 0.0) return "(" + s + ")";
    return s;
}

const char* op_text(NodeKind k) {
    switch (k) {
        case NodeKind::Add: return " + ";
        case NodeKind::Sub: return " - ";
        case NodeKind::Mul: return "*";
        case NodeKind::Div: return "/";
        case NodeKind::Pow: return "^";
        case NodeKind::Less: return " < ";
        case NodeKind::LessEq: return " <= ";
        case NodeKind::Greater: return " > ";
        case NodeKind::GreaterEq: return " >= ";
        case NodeKind::And: return " && ";
        default: return "?";
    }
}

void print_node(const Tree& t, int i, std::string& out) {
    const ExprNode& n = t.nodes[i];
    switch (n.kind) {
        case NodeKind::Const: out += format_number(n.value); return;
        case NodeKind::Var:
            out += t.arity == 1 ? std::string("x") : "x" + std::to_string(n.var + 1);
            return;
        case NodeKind::Neg:
            // unary minus binds looser than ^, so a negated base needs its own parentheses
            out += "(-(";
            print_node(t, n.a, out);
            out += "))";
            return;
        case NodeKind::Less:
        case NodeKind::LessEq:
        case NodeKind::Greater:
        case NodeKind::GreaterEq:
        case NodeKind::And:
            print_node(t, n.a, out);
            out += op_text(n.kind);
            print_node(t, n.b, out);
            return;
        case NodeKind::Call: {
            out += builtin_name(n.fn);
            out += "(";
            for (int c = 0; c < n.count; ++c) {
                if (c) out += ", ";
                print_node(t, t.kids[n.first + c], out);
            }
            out += ")";
            return;
        }
        case NodeKind::Piecewise: {
            out += "piecewise(";
            for (int c = 0; c + 1 < n.count; c += 2) {
                if (c) out += "; ";
                print_node(t, t.kids[n.first + c], out);
                out += " : ";
                print_node(t, t.kids[n.first + c + 1], out);
            }
            out += ")";
            return;
        }
        default:
            out += "(";
            print_node(t, n.a, out);
            out += op_text(n.kind);
            print_node(t, n.b, out);
            out += ")";
            return;
    }
}

bool same_node(const Tree& ta, int ia, const Tree& tb, int ib) {
    const ExprNode& a = ta.nodes[ia];
    const ExprNode& b = tb.nodes[ib];
    if (a.kind != b.kind || a.count != b.count) return false;
    switch (a.kind) {
        case NodeKind::Const: return a.value == b.value;
        case NodeKind::Var: return a.var == b.var;
        case NodeKind::Call:
        case NodeKind::Piecewise:
            if (a.kind == NodeKind::Call && a.fn != b.fn) return false;
            for (int c = 0; c < a.count; ++c)
                if (!same_node(ta, ta.kids[a.first + c], tb, tb.kids[b.first + c])) return false;
            return true;
        case NodeKind::Neg: return same_node(ta, a.a, tb, b.a);
        default: return same_node(ta, a.a, tb, b.a) && same_node(ta, a.b, tb, b.b);
    }
}

}  // namespace

FuncExpr FuncExpr::parse(std::string_view text, int arity) {
    if (arity < 1) throw Error(ErrorCode::ArityMismatch, "arity must be positive");
    Parser p(text, arity);
    return FuncExpr(p.run());
}

int FuncExpr::arity() const { return tree_ ? tree_->arity : 0; }

double FuncExpr::eval(std::span<const double> x) const {
    if (!tree_) throw Error(ErrorCode::SyntaxError, "evaluating an empty expression");
    if (static_cast<int>(x.size()) != tree_->arity)
        throw Error(ErrorCode::ArityMismatch, "expected " + std::to_string(tree_->arity) + " arguments");
    return eval_node(*tree_, tree_->root, x.data());
}

double FuncExpr::operator()(double x) const { return eval(std::span<const double>(&x, 1)); }

std::string FuncExpr::to_string() const {
    std::string out;
    if (tree_) print_node(*tree_, tree_->root, out);
    return out;
}

bool FuncExpr::structurally_equal(const FuncExpr& other) const {
    if (!tree_ || !other.tree_) return !tree_ && !other.tree_;
    return tree_->arity == other.tree_->arity &&
           same_node(*tree_, tree_->root, *other.tree_, other.tree_->root);
}

FuncExpr FuncExpr::rebind(int new_arity, const std::vector<int>& var_map) const {
    auto t = std::make_shared<Tree>(*tree_);
    t->arity = new_arity;
    for (auto& n : t->nodes) {
        if (n.kind != NodeKind::Var) continue;
        if (n.var >= static_cast<int>(var_map.size()) || var_map[n.var] < 0 || var_map[n.var] >= new_arity)
            throw Error(ErrorCode::ArityMismatch, "variable map does not cover x" + std::to_string(n.var + 1));
        n.var = var_map[n.var];
    }
    return FuncExpr(std::move(t));
}

namespace {

int copy_subtree(const Tree& src, int i, Tree& dst, const std::vector<const Tree*>& args) {
    const ExprNode& n = src.nodes[i];
    if (n.kind == NodeKind::Var && !args.empty()) {
        const Tree& a = *args[n.var];
        return copy_subtree(a, a.root, dst, {});
    }
    ExprNode m = n;
    if (n.a >= 0) m.a = copy_subtree(src, n.a, dst, args);
    if (n.b >= 0) m.b = copy_subtree(src, n.b, dst, args);
    if (n.kind == NodeKind::Call || n.kind == NodeKind::Piecewise) {
        std::vector<int> ch;
        for (int c = 0; c < n.count; ++c) ch.push_back(copy_subtree(src, src.kids[n.first + c], dst, args));
        m.first = static_cast<int>(dst.kids.size());
        dst.kids.insert(dst.kids.end(), ch.begin(), ch.end());
    }
    if (m.kind == NodeKind::Neg && dst.nodes[m.a].kind == NodeKind::Const) {
        // keep the parser's canonical form for negative literals
        ExprNode c = dst.nodes[m.a];
        c.value = -c.value;
        dst.nodes.push_back(c);
        return static_cast<int>(dst.nodes.size()) - 1;
    }
    dst.nodes.push_back(m);
    return static_cast<int>(dst.nodes.size()) - 1;
}

}  // namespace

FuncExpr FuncExpr::compose(const std::vector<FuncExpr>& args) const {
    if (static_cast<int>(args.size()) != arity())
        throw Error(ErrorCode::ArityMismatch, "compose needs one argument per variable");
    std::vector<const Tree*> trees;
    for (const auto& a : args) {
        if (a.empty() || a.arity() != args.front().arity())
            throw Error(ErrorCode::ArityMismatch, "composed arguments must share one arity");
        trees.push_back(a.tree_.get());
    }
    auto t = std::make_shared<Tree>();
    t->arity = args.front().arity();
    t->root = copy_subtree(*tree_, tree_->root, *t, trees);
    return FuncExpr(std::move(t));
}

FuncExpr FuncExpr::variable(int index, int arity) {
    if (index < 0 || index >= arity) throw Error(ErrorCode::ArityMismatch, "variable index out of range");
    auto t = std::make_shared<Tree>();
    t->arity = arity;
    ExprNode n;
    n.kind = NodeKind::Var;
    n.var = index;
    t->nodes.push_back(n);
    t->root = 0;
    return FuncExpr(std::move(t));
}

FuncExpr FuncExpr::constant(double value, int arity) {
    auto t = std::make_shared<Tree>();
    t->arity = arity;
    ExprNode n;
    n.kind = NodeKind::Const;
    n.value = value;
    t->nodes.push_back(n);
    t->root = 0;
    return FuncExpr(std::move(t));
}

std::vector<int> FuncExpr::free_variables() const {
    std::set<int> vars;
    if (tree_)
        for (const auto& n : tree_->nodes)
            if (n.kind == NodeKind::Var) vars.insert(n.var);
    return {vars.begin(), vars.end()};
}

// ---------------------------------------------------------------- derivatives

namespace {

constexpr int kLevels = 7;  // h_k = base * 2^-k, k = 0..6

// 1e-2, widened for orders >= 4 where roundoff dominates
double base_step(int order) { return std::ldexp(1e-2, std::max(0, order - 3)); }

double binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

/// Richardson tableau assuming an error series in h, h^2, h^3, ...
/// (covers both smooth central differences and one-sided kinks).
Derivative extrapolate(const std::array<double, kLevels>& d0) {
    double t[kLevels][kLevels];
    Derivative best{d0[0], std::numeric_limits<double>::infinity()};
    for (int k = 0; k < kLevels; ++k) {
        t[k][0] = d0[k];
        if (k > 0) {
            const double e0 = std::fabs(t[k][0] - t[k - 1][0]);
            if (e0 < best.error) best = {t[k][0], e0};
        }
        for (int j = 1; j <= k; ++j) {
            const double fac = std::ldexp(1.0, j) - 1.0;
            t[k][j] = t[k][j - 1] + (t[k][j - 1] - t[k - 1][j - 1]) / fac;
            const double err = std::max(std::fabs(t[k][j] - t[k][j - 1]), std::fabs(t[k][j] - t[k - 1][j - 1]));
            if (err < best.error) best = {t[k][j], err};
        }
    }
    return best;
}

}  // namespace

Derivative derive_callable(const std::function<double(double)>& f, double x0, int order) {
    if (order < 1 || order > 6)
        throw Error(ErrorCode::OrderUnsupported, "derivative order must be in 1..6, got " + std::to_string(order));

    std::array<double, kLevels> central{}, fwd{}, bwd{};
    bool have_fwd = true, have_bwd = true;
    for (int k = 0; k < kLevels; ++k) {
        const double h = std::ldexp(base_step(order), -k);
        const double hm = std::pow(h, order);
        double c = 0.0;
        for (int j = 0; j <= order; ++j) {
            const double w = ((j & 1) ? -1.0 : 1.0) * binom(order, j);
            c += w * f(x0 + (0.5 * order - j) * h);
        }
        central[k] = c / hm;
        auto one_sided = [&](double dir, bool& ok) {
            if (!ok) return 0.0;
            try {
                double s = 0.0;
                for (int j = 0; j <= order; ++j) {
                    const double w = (((order - j) & 1) ? -1.0 : 1.0) * binom(order, j);
                    s += w * f(x0 + dir * j * h);
                }
                return s / hm * ((order & 1) && dir < 0 ? -1.0 : 1.0);
            } catch (const Error&) {
                ok = false;
                return 0.0;
            }
        };
        fwd[k] = one_sided(1.0, have_fwd);
        bwd[k] = one_sided(-1.0, have_bwd);
    }

    const Derivative c = extrapolate(central);
    const double scale = 1.0 + std::fabs(c.value);
    if (!std::isfinite(c.value) || c.error > 1e-3 * scale)
        throw Error(ErrorCode::NonsmoothAtPoint,
                    "extrapolants diverge at x=" + std::to_string(x0) + " (order " + std::to_string(order) + ")");
    if (have_fwd && have_bwd) {
        const Derivative r = extrapolate(fwd);
        const Derivative l = extrapolate(bwd);
        const double gap = std::fabs(r.value - l.value);
        if (gap > 1e-5 * scale + 20.0 * (r.error + l.error + c.error))
            throw Error(ErrorCode::NonsmoothAtPoint, "one-sided derivatives differ at x=" + std::to_string(x0) +
                                                         " (order " + std::to_string(order) + ")");
    }
    return c;
}

Derivative derive_at(const FuncExpr& expr, double x0, int order) {
    if (expr.arity() != 1) throw Error(ErrorCode::ArityMismatch, "derive_at needs an arity-1 expression");
    return derive_callable([&](double x) { return expr(x); }, x0, order);
}

std::vector<Derivative> gradient_at(const FuncExpr& expr, std::span<const double> x0) {
    std::vector<double> x(x0.begin(), x0.end());
    if (static_cast<int>(x.size()) != expr.arity())
        throw Error(ErrorCode::ArityMismatch, "gradient point has wrong dimension");
    std::vector<Derivative> out;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double base = x[i];
        out.push_back(derive_callable(
            [&](double t) {
                std::vector<double> y = x;
                y[i] = t;
                return expr.eval(y);
            },
            base, 1));
    }
    return out;
}

}  // namespace erwlab
