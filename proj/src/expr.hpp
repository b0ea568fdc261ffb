#pragma once

#include <string>
#include <vector>

namespace freesing {

// Real-valued expression in one variable (written `s` or `x`), compiled to a
// small stack program. Grammar: numbers, pi, e, + - * / ^, parentheses and
// the functions sqrt, exp, log, abs.
class Expr {
public:
    Expr() = default;
    static Expr parse(const std::string& text);
    static Expr constant(double v);

    double operator()(double s) const;
    bool uses_variable() const { return uses_var_; }
    bool empty() const { return code_.empty(); }
    const std::string& text() const { return text_; }

    struct Op {
        int kind;
        double value;
    };

private:
    std::vector<Op> code_;
    int max_depth_ = 0;
    bool uses_var_ = false;
    std::string text_;

    friend class ExprCompiler;
};

// Evaluates a constant expression such as "1/(2*pi)"; throws Config on error
// or if the text mentions the variable.
double eval_constant(const std::string& text);

} // namespace freesing
