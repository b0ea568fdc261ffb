#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace freesing {

struct QuadOptions {
    double rel_tol = 1e-12;
    double abs_tol = 0.0;
    // Tolerance floor relative to the integral of |f|; keeps integrals that
    // cancel to ~0 from demanding impossible relative accuracy.
    double l1_floor = 1e-13;
    std::size_t max_panels = 100000;
};

// A piece of the integration range with an optional square-root change of
// variable at one end, s = anchor + v^2 (SqrtLeft) or s = anchor - v^2
// (SqrtRight). The substitution makes integrands behaving like
// |s - anchor|^(m + 1/2) analytic in v.
struct Piece {
    enum Map { Linear, SqrtLeft, SqrtRight };
    double lo, hi;
    Map map = Linear;
};

// Vector integrand: f(s, out) writes dim values.
using VecIntegrand = std::function<void(double, double*)>;

struct QuadResult {
    std::vector<double> value;
    std::vector<double> error;
    std::size_t panels = 0;
};

QuadResult integrate(const VecIntegrand& f, int dim, const std::vector<Piece>& pieces,
                     const QuadOptions& opt = {});

// Splits [a, b] at the given interior breakpoints; the end pieces get a
// square-root map when sqrt_a / sqrt_b is set.
std::vector<Piece> make_pieces(double a, double b, std::vector<double> breaks, bool sqrt_a,
                               bool sqrt_b);

// Breakpoints c +/- h 4^k inside (lo, hi), for integrands with structure on scale h near c.
std::vector<double> graded_breaks(double c, double h, double lo, double hi);

double integrate_scalar(const std::function<double(double)>& f, double a, double b,
                        const std::vector<double>& breaks = {}, bool sqrt_a = false,
                        bool sqrt_b = false, const QuadOptions& opt = {});

// Gauss-Legendre rule on [-1, 1] with n points (n in {10, 15, 20, 30, 40}).
struct GaussRule {
    std::vector<double> x, w;
};
const GaussRule& gauss_rule(int n);

} // namespace freesing
