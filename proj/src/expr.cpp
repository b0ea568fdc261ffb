#include "expr.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <memory>
#include <numbers>

#include "error.hpp"

namespace freesing {

namespace {

enum OpKind { kConst, kVar, kAdd, kSub, kMul, kDiv, kPow, kPowInt, kNeg, kSqrt, kExp, kLog, kAbs };

struct Node {
    int kind;
    double value = 0.0;
    std::unique_ptr<Node> a, b;
};
using NodeP = std::unique_ptr<Node>;

NodeP leaf(int kind, double v = 0.0) {
    auto n = std::make_unique<Node>();
    n->kind = kind;
    n->value = v;
    return n;
}

NodeP node(int kind, NodeP a, NodeP b = nullptr) {
    auto n = std::make_unique<Node>();
    n->kind = kind;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

class Parser {
public:
    explicit Parser(const std::string& t) : t_(t) {}

    NodeP run() {
        NodeP e = expr();
        skip();
        if (p_ != t_.size()) error("unexpected '" + std::string(1, t_[p_]) + "'");
        return e;
    }

private:
    const std::string& t_;
    size_t p_ = 0;

    [[noreturn]] void error(const std::string& what) const {
        fail(Code::Config, "expression \"" + t_ + "\": " + what + " at offset " + std::to_string(p_));
    }
    void skip() {
        while (p_ < t_.size() && std::isspace(static_cast<unsigned char>(t_[p_]))) ++p_;
    }
    bool eat(char c) {
        skip();
        if (p_ < t_.size() && t_[p_] == c) {
            ++p_;
            return true;
        }
        return false;
    }

    NodeP expr() {
        NodeP l = term();
        for (;;) {
            if (eat('+')) l = node(kAdd, std::move(l), term());
            else if (eat('-')) l = node(kSub, std::move(l), term());
            else return l;
        }
    }
    NodeP term() {
        NodeP l = unary();
        for (;;) {
            if (eat('*')) l = node(kMul, std::move(l), unary());
            else if (eat('/')) l = node(kDiv, std::move(l), unary());
            else return l;
        }
    }
    NodeP unary() {
        if (eat('-')) return node(kNeg, unary());
        if (eat('+')) return unary();
        return power();
    }
    NodeP power() {
        NodeP base = primary();
        if (eat('^')) return node(kPow, std::move(base), unary());
        return base;
    }
    NodeP primary() {
        skip();
        if (p_ >= t_.size()) error("unexpected end");
        char c = t_[p_];
        if (c == '(') {
            ++p_;
            NodeP e = expr();
            if (!eat(')')) error("missing ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = t_.c_str() + p_;
            char* end = nullptr;
            double v = std::strtod(begin, &end);
            if (end == begin) error("bad number");
            p_ += static_cast<size_t>(end - begin);
            return leaf(kConst, v);
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            size_t q = p_;
            while (q < t_.size() && (std::isalnum(static_cast<unsigned char>(t_[q])) || t_[q] == '_')) ++q;
            std::string id = t_.substr(p_, q - p_);
            p_ = q;
            if (id == "s" || id == "x") return leaf(kVar);
            if (id == "pi") return leaf(kConst, std::numbers::pi);
            if (id == "e") return leaf(kConst, std::numbers::e);
            int fk = -1;
            if (id == "sqrt") fk = kSqrt;
            else if (id == "exp") fk = kExp;
            else if (id == "log") fk = kLog;
            else if (id == "abs") fk = kAbs;
            if (fk < 0) error("unknown identifier '" + id + "'");
            if (!eat('(')) error("expected '(' after " + id);
            NodeP arg = expr();
            if (!eat(')')) error("missing ')'");
            return node(fk, std::move(arg));
        }
        error("unexpected '" + std::string(1, c) + "'");
    }
};

double apply(int kind, double a, double b) {
    switch (kind) {
    case kAdd: return a + b;
    case kSub: return a - b;
    case kMul: return a * b;
    case kDiv: return a / b;
    case kPow: return std::pow(a, b);
    case kNeg: return -a;
    case kSqrt: return std::sqrt(a);
    case kExp: return std::exp(a);
    case kLog: return std::log(a);
    case kAbs: return std::fabs(a);
    default: return std::nan("");
    }
}

bool has_var(const Node* n) {
    if (!n) return false;
    return n->kind == kVar || has_var(n->a.get()) || has_var(n->b.get());
}

// Folds variable-free subtrees into constants.
void fold(NodeP& n) {
    if (n->a) fold(n->a);
    if (n->b) fold(n->b);
    if (n->kind == kConst || n->kind == kVar) return;
    if (!has_var(n.get())) {
        double v = apply(n->kind, n->a->value, n->b ? n->b->value : 0.0);
        n = leaf(kConst, v);
    }
}

double ipow(double x, int k) {
    bool inv = k < 0;
    unsigned m = static_cast<unsigned>(inv ? -k : k);
    double r = 1.0;
    while (m) {
        if (m & 1u) r *= x;
        x *= x;
        m >>= 1u;
    }
    return inv ? 1.0 / r : r;
}

} // namespace

class ExprCompiler {
public:
    static void emit(Expr& e, const Node* n, int depth) {
        switch (n->kind) {
        case kConst:
        case kVar:
            e.code_.push_back({n->kind, n->value});
            e.max_depth_ = std::max(e.max_depth_, depth + 1);
            return;
        default:
            break;
        }
        if (n->kind == kPow && n->b->kind == kConst) {
            double p = n->b->value;
            if (p == std::floor(p) && std::fabs(p) <= 64) {
                emit(e, n->a.get(), depth);
                e.code_.push_back({kPowInt, p});
                return;
            }
        }
        emit(e, n->a.get(), depth);
        if (n->b) emit(e, n->b.get(), depth + 1);
        e.code_.push_back({n->kind, 0.0});
    }
};

Expr Expr::parse(const std::string& text) {
    Parser p(text);
    NodeP root = p.run();
    fold(root);
    Expr e;
    e.text_ = text;
    e.uses_var_ = has_var(root.get());
    ExprCompiler::emit(e, root.get(), 0);
    return e;
}

Expr Expr::constant(double v) {
    Expr e;
    e.code_.push_back({kConst, v});
    e.max_depth_ = 1;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    e.text_ = buf;
    return e;
}

double Expr::operator()(double s) const {
    double stack[64];
    std::vector<double> heap;
    double* st = stack;
    if (max_depth_ > 64) {
        heap.resize(static_cast<size_t>(max_depth_));
        st = heap.data();
    }
    int top = -1;
    for (const Op& op : code_) {
        switch (op.kind) {
        case kConst: st[++top] = op.value; break;
        case kVar: st[++top] = s; break;
        case kPowInt: st[top] = ipow(st[top], static_cast<int>(op.value)); break;
        case kNeg:
        case kSqrt:
        case kExp:
        case kLog:
        case kAbs: st[top] = apply(op.kind, st[top], 0.0); break;
        default:
            st[top - 1] = apply(op.kind, st[top - 1], st[top]);
            --top;
        }
    }
    return top == 0 ? st[0] : std::nan("");
}

double eval_constant(const std::string& text) {
    Expr e = Expr::parse(text);
    if (e.uses_variable()) fail(Code::Config, "expression \"" + text + "\" must be constant");
    return e(0.0);
}

} // namespace freesing
