#include "quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "error.hpp"

namespace freesing {

namespace {

template <unsigned N>
GaussRule build_rule() {
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& a = G::abscissa();
    const auto& w = G::weights();
    GaussRule r;
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) {
            r.x.push_back(0.0);
            r.w.push_back(w[i]);
        } else {
            r.x.push_back(a[i]);
            r.w.push_back(w[i]);
            r.x.push_back(-a[i]);
            r.w.push_back(w[i]);
        }
    }
    return r;
}

constexpr int kOrder = 15;
// Bisection depth beyond which a panel's residual error is treated as noise.
constexpr int kMaxDepth = 48;

struct Panel {
    double p, q;
    Piece::Map map;
    double anchor;
    int depth;
    size_t off;  // into value/error pools
};

class Engine {
public:
    Engine(const VecIntegrand& f, int dim) : f_(f), dim_(dim), buf_(static_cast<size_t>(dim)) {}

    // Evaluates GL on [p, q] in the v variable, accumulating into out (and |f| into l1).
    void rule(const Panel& pn, double p, double q, double* out, double* l1) {
        const GaussRule& g = gauss_rule(kOrder);
        double c = 0.5 * (p + q), h = 0.5 * (q - p);
        std::fill(out, out + dim_, 0.0);
        for (size_t i = 0; i < g.x.size(); ++i) {
            double v = c + h * g.x[i];
            double s, jac;
            switch (pn.map) {
            case Piece::SqrtLeft: s = pn.anchor + v * v; jac = 2 * v; break;
            case Piece::SqrtRight: s = pn.anchor - v * v; jac = 2 * v; break;
            default: s = v; jac = 1.0;
            }
            f_(s, buf_.data());
            double wt = g.w[i] * h * jac;
            for (int d = 0; d < dim_; ++d) {
                double t = wt * buf_[static_cast<size_t>(d)];
                if (!std::isfinite(t))
                    fail(Code::Divergent, "non-finite integrand value at s = " + std::to_string(s));
                out[d] += t;
                l1[d] += std::fabs(t);
            }
        }
    }

    // Returns halves estimate in val, |whole - halves| in err.
    void panel(const Panel& pn, double* val, double* err, double* l1) {
        whole.resize(static_cast<size_t>(dim_));
        left.resize(static_cast<size_t>(dim_));
        right.resize(static_cast<size_t>(dim_));
        junk.assign(static_cast<size_t>(dim_), 0.0);
        double m = 0.5 * (pn.p + pn.q);
        rule(pn, pn.p, pn.q, whole.data(), junk.data());
        rule(pn, pn.p, m, left.data(), l1);
        rule(pn, m, pn.q, right.data(), l1);
        for (int d = 0; d < dim_; ++d) {
            val[d] = left[static_cast<size_t>(d)] + right[static_cast<size_t>(d)];
            err[d] = std::fabs(val[d] - whole[static_cast<size_t>(d)]);
        }
    }

private:
    const VecIntegrand& f_;
    int dim_;
    std::vector<double> buf_;
    std::vector<double> whole, left, right, junk;
};

} // namespace

const GaussRule& gauss_rule(int n) {
    static const GaussRule r10 = build_rule<10>();
    static const GaussRule r15 = build_rule<15>();
    static const GaussRule r20 = build_rule<20>();
    static const GaussRule r30 = build_rule<30>();
    static const GaussRule r40 = build_rule<40>();
    switch (n) {
    case 10: return r10;
    case 15: return r15;
    case 20: return r20;
    case 30: return r30;
    case 40: return r40;
    default: fail(Code::InvalidArgument, "unsupported Gauss rule order " + std::to_string(n));
    }
}

std::vector<Piece> make_pieces(double a, double b, std::vector<double> breaks, bool sqrt_a,
                               bool sqrt_b) {
    if (!(b > a)) return {};
    std::vector<double> pts{a};
    std::sort(breaks.begin(), breaks.end());
    for (double x : breaks)
        if (x > a && x < b && x > pts.back()) pts.push_back(x);
    pts.push_back(b);
    if (pts.size() == 2 && sqrt_a && sqrt_b) pts.insert(pts.begin() + 1, 0.5 * (a + b));
    std::vector<Piece> out;
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
        Piece pc{pts[i], pts[i + 1], Piece::Linear};
        if (i == 0 && sqrt_a) pc.map = Piece::SqrtLeft;
        else if (i + 2 == pts.size() && sqrt_b) pc.map = Piece::SqrtRight;
        out.push_back(pc);
    }
    return out;
}

QuadResult integrate(const VecIntegrand& f, int dim, const std::vector<Piece>& pieces,
                     const QuadOptions& opt) {
    const size_t D = static_cast<size_t>(dim);
    QuadResult res;
    res.value.assign(D, 0.0);
    res.error.assign(D, 0.0);
    if (pieces.empty()) return res;

    Engine eng(f, dim);
    std::vector<Panel> panels;
    std::vector<double> vals, errs, l1s;
    std::vector<double> l1(D, 0.0);
    std::vector<double> total(D, 0.0), errsum(D, 0.0);

    auto add_panel = [&](Panel pn) {
        pn.off = vals.size();
        vals.resize(vals.size() + D);
        errs.resize(errs.size() + D);
        l1s.resize(l1s.size() + D, 0.0);
        double* pl1 = &l1s[pn.off];
        eng.panel(pn, &vals[pn.off], &errs[pn.off], pl1);
        // Error at the level of rounding is not reducible by refinement.
        bool at_roundoff = true;
        for (size_t d = 0; d < D; ++d)
            if (errs[pn.off + d] > 64 * std::numeric_limits<double>::epsilon() * pl1[d]) at_roundoff = false;
        double width = std::fabs(pn.q - pn.p);
        double scale = std::max({std::fabs(pn.p), std::fabs(pn.q), 1e-300});
        if (at_roundoff || width < 1e-15 * scale || pn.depth >= kMaxDepth)
            for (size_t d = 0; d < D; ++d) errs[pn.off + d] = 0.0;
        for (size_t d = 0; d < D; ++d) {
            total[d] += vals[pn.off + d];
            errsum[d] += errs[pn.off + d];
            l1[d] += pl1[d];
        }
        panels.push_back(pn);
        return panels.size() - 1;
    };

    for (const Piece& pc : pieces) {
        Panel pn{};
        pn.map = pc.map;
        switch (pc.map) {
        case Piece::SqrtLeft:
            pn.anchor = pc.lo;
            pn.p = 0.0;
            pn.q = std::sqrt(pc.hi - pc.lo);
            break;
        case Piece::SqrtRight:
            pn.anchor = pc.hi;
            pn.p = 0.0;
            pn.q = std::sqrt(pc.hi - pc.lo);
            break;
        default:
            pn.anchor = 0.0;
            pn.p = pc.lo;
            pn.q = pc.hi;
        }
        add_panel(pn);
    }

    auto tol = [&](size_t d) {
        return std::max({opt.abs_tol, opt.rel_tol * std::fabs(total[d]), opt.l1_floor * l1[d], 1e-300});
    };
    auto key = [&](size_t idx) {
        double k = 0.0;
        for (size_t d = 0; d < D; ++d) k = std::max(k, errs[panels[idx].off + d] / tol(d));
        return k;
    };
    auto done = [&] {
        for (size_t d = 0; d < D; ++d)
            if (errsum[d] > tol(d)) return false;
        return true;
    };

    using Item = std::pair<double, size_t>;
    std::priority_queue<Item> heap;
    for (size_t i = 0; i < panels.size(); ++i) heap.push({key(i), i});

    size_t refinements = 0;
    while (!done()) {
        if (heap.empty()) break;
        auto [k, idx] = heap.top();
        if (k == 0.0) break;
        heap.pop();
        if (panels.size() >= opt.max_panels)
            fail(Code::NonConvergent, "adaptive quadrature exceeded " + std::to_string(opt.max_panels) +
                                          " panels");
        Panel parent = panels[idx];
        for (size_t d = 0; d < D; ++d) {
            total[d] -= vals[parent.off + d];
            errsum[d] -= errs[parent.off + d];
            l1[d] -= l1s[parent.off + d];
        }
        double m = 0.5 * (parent.p + parent.q);
        Panel a = parent, b = parent;
        a.depth = b.depth = parent.depth + 1;
        a.q = m;
        b.p = m;
        size_t ia = add_panel(a);
        size_t ib = add_panel(b);
        heap.push({key(ia), ia});
        heap.push({key(ib), ib});
        // Running sums drift slightly; refresh them now and then.
        if (++refinements % 256 == 0) {
            std::fill(total.begin(), total.end(), 0.0);
            std::fill(errsum.begin(), errsum.end(), 0.0);
            std::vector<char> live(panels.size(), 0);
            auto copy = heap;
            while (!copy.empty()) {
                live[copy.top().second] = 1;
                copy.pop();
            }
            for (size_t i = 0; i < panels.size(); ++i)
                if (live[i])
                    for (size_t d = 0; d < D; ++d) {
                        total[d] += vals[panels[i].off + d];
                        errsum[d] += errs[panels[i].off + d];
                    }
        }
    }
    // Final sums over live panels, from scratch.
    std::vector<char> live(panels.size(), 0);
    while (!heap.empty()) {
        live[heap.top().second] = 1;
        heap.pop();
    }
    for (size_t i = 0; i < panels.size(); ++i)
        if (live[i])
            for (size_t d = 0; d < D; ++d) {
                res.value[d] += vals[panels[i].off + d];
                res.error[d] += errs[panels[i].off + d];
            }
    res.panels = panels.size();
    return res;
}

std::vector<double> graded_breaks(double c, double h, double lo, double hi) {
    std::vector<double> out;
    if (!(h > 0)) return out;
    double span = std::max(std::fabs(hi - c), std::fabs(c - lo));
    for (double d = h; d < span; d *= 4.0) {
        if (c + d > lo && c + d < hi) out.push_back(c + d);
        if (c - d > lo && c - d < hi) out.push_back(c - d);
    }
    return out;
}

double integrate_scalar(const std::function<double(double)>& f, double a, double b,
                        const std::vector<double>& breaks, bool sqrt_a, bool sqrt_b,
                        const QuadOptions& opt) {
    VecIntegrand g = [&f](double s, double* out) { out[0] = f(s); };
    return integrate(g, 1, make_pieces(a, b, breaks, sqrt_a, sqrt_b), opt).value[0];
}

} // namespace freesing
