#include "freeconv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "error.hpp"

namespace freesing {

namespace {

// Tolerance functor for toms748 in absolute+relative form.
struct CloseEnough {
    double abs_tol;
    bool operator()(double a, double b) const {
        return std::fabs(b - a) <= abs_tol + 4 * std::numeric_limits<double>::epsilon() *
                                                 std::max(std::fabs(a), std::fabs(b));
    }
};

// psi0(s)/(x*-s) inside the window, with the declared factor divided out.
// d = s - x* is passed separately so callers can supply it without cancellation.
double window_over_distance(const SingularPoint& sp, double s, double d) {
    double cp = std::pow(sp.c0, sp.kappa() + 1);
    switch (sp.kind) {
    case SingularKind::Interior: return -cp * std::pow(d, 2 * sp.k - 1) * sp.h(s);
    case SingularKind::RightEdge: return cp * std::pow(-d, sp.kappa() - 1) * sp.h(s);
    case SingularKind::LeftEdge: return -cp * std::pow(d, sp.kappa() - 1) * sp.h(s);
    }
    return 0.0;
}

} // namespace

double tau_crit(const Measure& m, double x_star) {
    double g1 = moment_g(m, x_star, 1);
    if (!(g1 > 0)) fail(Code::Divergent, "non-positive second inverse moment");
    return 1.0 / g1;
}

double x_star_tau(const Measure& m, double x_star, double tau) {
    return x_star - tau * moment_g(m, x_star, 0);
}

SubordinationSolver::SubordinationSolver(Measure m, double tau) : m_(std::move(m)), tau_(tau) {
    if (!(tau > 0)) fail(Code::InvalidArgument, "tau must be positive");
    double lo = m_.support_lo(), hi = m_.support_hi();
    double spread = std::sqrt(m_.mass() * tau_);
    scale_ = std::max({hi - lo, spread, 1e-3});
    double pad = 3.0 * spread + 0.1 * (hi - lo) + 0.1;
    std::vector<double> special;
    for (const Segment& sg : m_.segments()) {
        special.push_back(sg.a);
        special.push_back(sg.b);
    }
    for (const SingularPoint& sp : m_.singular_points()) special.push_back(sp.x_star);
    std::vector<double> us = special;
    const int N = 96;
    for (int i = 0; i <= N; ++i) {
        double u = lo - pad + (hi - lo + 2 * pad) * i / N;
        bool near = false;
        for (double q : special) near = near || std::fabs(u - q) < 1e-6 * scale_;
        if (!near) us.push_back(u);
    }
    std::sort(us.begin(), us.end());
    us.erase(std::unique(us.begin(), us.end()), us.end());
    for (double u : us) cache_.push_back(boundary(u));
    for (size_t i = 1; i < cache_.size(); ++i)
        if (!(cache_[i].rho > cache_[i - 1].rho))
            fail(Code::Internal, "boundary map is not increasing near u = " + std::to_string(cache_[i].u));
}

double SubordinationSolver::inverse_moment_at(double u) const {
    for (const Atom& a : m_.atom_list())
        if (a.location == u && a.mass > 0) return INFINITY;
    if (m_.singular_at(u)) return moment_g(m_, u, 1);
    double total = 0.0;
    QuadOptions opt;
    opt.rel_tol = 1e-13;
    for (const Segment& sg : m_.segments()) {
        if (u > sg.a && u < sg.b) return INFINITY;
        if ((u == sg.a && !(sg.alpha_a > 1)) || (u == sg.b && !(sg.alpha_b > 1))) return INFINITY;
        double lo = sg.a - u, hi = sg.b - u;
        double dist = std::min(std::fabs(lo), std::fabs(hi));
        VecIntegrand g = [&](double t, double* o) { o[0] = sg.at(u + t, t - lo, hi - t) / (t * t); };
        std::vector<double> br;
        if (dist > 0) br = graded_breaks(0.0, dist, lo, hi);
        total += integrate(g, 1, make_pieces(lo, hi, br, true, true), opt).value[0];
    }
    for (const Atom& a : m_.atom_list()) total += a.mass / ((u - a.location) * (u - a.location));
    return total;
}

double SubordinationSolver::real_cauchy(double u) const {
    if (m_.singular_at(u)) return -moment_g(m_, u, 0);
    double total = 0.0;
    QuadOptions opt;
    opt.rel_tol = 1e-13;
    for (const Segment& sg : m_.segments()) {
        double lo = sg.a - u, hi = sg.b - u;
        double dist = std::min(std::fabs(lo), std::fabs(hi));
        VecIntegrand g = [&](double t, double* o) { o[0] = -sg.at(u + t, t - lo, hi - t) / t; };
        std::vector<double> br;
        if (dist > 0) br = graded_breaks(0.0, dist, lo, hi);
        total += integrate(g, 1, make_pieces(lo, hi, br, true, true), opt).value[0];
    }
    for (const Atom& a : m_.atom_list()) total += a.mass / (u - a.location);
    return total;
}

double SubordinationSolver::y_solve(double u, double hint) const {
    double I0 = inverse_moment_at(u);
    if (I0 <= 1.0 / tau_) return 0.0;
    // Safeguarded Newton on phi(eta) = log(tau I(u, e^eta)), which is decreasing
    // and close to linear in eta; phi(eta_hi) <= 0 because I <= mass / y^2.
    const double eta_hi0 = std::log(std::sqrt(m_.mass() * tau_)) + 1e-12;
    double lo = -INFINITY, hi = eta_hi0;
    double eta = (hint > 0) ? std::min(std::log(hint), eta_hi0) : eta_hi0;
    const double eta_floor = std::log(1e-60 * scale_);
    for (int it = 0; it < 200; ++it) {
        double y = std::exp(eta);
        LorentzIntegrals L = lorentz_integrals(m_, u, y, true, false);
        double phi = std::log(tau_ * L.I);
        if (std::fabs(phi) < 4e-16) return y;
        if (phi > 0) lo = eta;
        else hi = eta;
        double dphi = -2.0 * y * y * L.J / L.I;
        double next = eta - phi / dphi;
        if (!std::isfinite(next) || next >= hi || (std::isfinite(lo) && next <= lo)) {
            next = std::isfinite(lo) ? 0.5 * (lo + hi) : hi - 3.0;
        }
        // Unbracketed steps are capped so J ~ 1/y^4 stays representable.
        if (!std::isfinite(lo)) next = std::max(next, eta - 30.0);
        if (std::fabs(next - eta) < 1e-14 * std::max(1.0, std::fabs(eta))) return std::exp(next);
        if (next < eta_floor) {
            // I stays below 1/tau down to the floor: the boundary touches the axis.
            if (eta <= eta_floor) return 0.0;
            next = std::isfinite(lo) ? 0.5 * (lo + hi) : std::max(eta_floor, eta - 30.0);
        }
        eta = next;
        if (std::isfinite(lo) && hi - lo < 1e-14 * std::max(1.0, std::fabs(eta))) return std::exp(eta);
    }
    fail(Code::NonConvergent, "y_tau root finder did not converge at u = " + std::to_string(u));
}

double SubordinationSolver::y_tau(double u) const { return y_solve(u, 0.0); }

BoundaryPoint SubordinationSolver::boundary(double u) const {
    // Interpolated hint from the cache speeds up the Newton iteration.
    double hint = 0.0;
    if (!cache_.empty() && u > cache_.front().u && u < cache_.back().u) {
        auto it = std::lower_bound(cache_.begin(), cache_.end(), u,
                                   [](const BoundaryPoint& b, double v) { return b.u < v; });
        const BoundaryPoint& r = *it;
        const BoundaryPoint& l = *(it - 1);
        double w = (u - l.u) / (r.u - l.u);
        double yi = (1 - w) * l.y + w * r.y;
        if (l.y > 0 && r.y > 0) hint = yi;
    }
    BoundaryPoint bp;
    bp.u = u;
    bp.y = y_solve(u, hint);
    if (bp.y > 0) {
        LorentzIntegrals L = lorentz_integrals(m_, u, bp.y, false, true);
        bp.rho = u + tau_ * L.R;
        bp.I = L.I;
    } else {
        bp.rho = u + tau_ * real_cauchy(u);
        bp.I = 0.0;
    }
    return bp;
}

cplx SubordinationSolver::subordinate(double x) const {
    std::map<double, BoundaryPoint> seen;
    auto eval = [&](double u) -> const BoundaryPoint& {
        auto it = seen.find(u);
        if (it != seen.end()) return it->second;
        return seen.emplace(u, boundary(u)).first->second;
    };
    double ulo, uhi, flo, fhi;
    if (x <= cache_.front().rho) {
        double step = scale_;
        uhi = cache_.front().u;
        fhi = cache_.front().rho - x;
        for (int k = 0;; ++k) {
            if (k > 60) fail(Code::BracketFailure, "cannot bracket x = " + std::to_string(x));
            ulo = uhi - step;
            flo = eval(ulo).rho - x;
            if (flo <= 0) break;
            uhi = ulo;
            fhi = flo;
            step *= 2;
        }
    } else if (x >= cache_.back().rho) {
        double step = scale_;
        ulo = cache_.back().u;
        flo = cache_.back().rho - x;
        for (int k = 0;; ++k) {
            if (k > 60) fail(Code::BracketFailure, "cannot bracket x = " + std::to_string(x));
            uhi = ulo + step;
            fhi = eval(uhi).rho - x;
            if (fhi >= 0) break;
            ulo = uhi;
            flo = fhi;
            step *= 2;
        }
    } else {
        auto it = std::upper_bound(cache_.begin(), cache_.end(), x,
                                   [](double v, const BoundaryPoint& b) { return v < b.rho; });
        const BoundaryPoint& r = *it;
        const BoundaryPoint& l = *(it - 1);
        ulo = l.u;
        uhi = r.u;
        flo = l.rho - x;
        fhi = r.rho - x;
        seen.emplace(l.u, l);
        seen.emplace(r.u, r);
    }
    double ustar;
    if (flo == 0) ustar = ulo;
    else if (fhi == 0) ustar = uhi;
    else {
        if (flo > 0 || fhi < 0) fail(Code::BracketFailure, "boundary map does not bracket x");
        std::uintmax_t iters = 200;
        auto f = [&](double u) { return eval(u).rho - x; };
        auto r = boost::math::tools::toms748_solve(f, ulo, uhi, flo, fhi, CloseEnough{1e-15 * scale_}, iters);
        if (iters >= 200) fail(Code::NonConvergent, "subordination root finder did not converge");
        double fa = std::fabs(eval(r.first).rho - x), fb = std::fabs(eval(r.second).rho - x);
        ustar = fa <= fb ? r.first : r.second;
    }
    const BoundaryPoint& bp = eval(ustar);
    if (std::fabs(bp.rho - x) > 1e-9 * std::max(1.0, std::fabs(x)))
        fail(Code::NonConvergent, "subordination residual too large at x = " + std::to_string(x));
    return {bp.u, bp.y};
}

double SubordinationSolver::density(double x) const {
    cplx F = subordinate(x);
    if (F.imag() <= 0) return 0.0;
    // -Im G(F)/pi with Im G(u + iy) = -y I(u, y).
    LorentzIntegrals L = lorentz_integrals(m_, F.real(), F.imag(), false, false);
    return F.imag() * L.I / std::numbers::pi;
}

DensityProfile SubordinationSolver::density(const std::vector<double>& grid) const {
    DensityProfile p;
    p.tau = tau_;
    p.grid = grid;
    p.psi.reserve(grid.size());
    for (double x : grid) p.psi.push_back(density(x));
    p.x_star_tau = m_.singular_points().size() == 1
                       ? x_star_tau(m_, m_.singular_points().front().x_star, tau_)
                       : std::nan("");
    return p;
}

bool SubordinationSolver::rightmost_flat_check(double x_star) const {
    double xt = x_star_tau(m_, x_star, tau_);
    for (int i = 1; i <= 64; ++i)
        if (density(xt + i / 64.0) > 1e-10) return false;
    return true;
}

double SubordinationSolver::offset_from_critical(const SingularPoint& sp, double u, double* y_out,
                                                 double* I_out) const {
    const double xs = sp.x_star;
    const double a = u - xs;
    double y = y_solve(u, 0.0);
    if (y_out) *y_out = y;
    if (a == 0.0 && y == 0.0) return 0.0;
    double I = 0.0;
    if (y > 0) I = lorentz_integrals(m_, u, y, false, false).I;
    if (I_out) *I_out = I;

    // K = int psi0(s) / ((x*-s)((u-s)^2 + y^2)) ds with the factor divided out near x*.
    QuadOptions opt;
    opt.rel_tol = 1e-13;
    double K = 0.0;
    for (const Segment& sg : m_.segments()) {
        bool owns = xs >= sg.a && xs <= sg.b;
        double delta = std::min((sg.b - sg.a) / 4, 0.1);
        double lo = sg.a - u, hi = sg.b - u;
        const double y2 = y * y;
        VecIntegrand g = [&](double t, double* o) {
            double s = u + t;
            double w = (owns && std::fabs(s - xs) <= delta) ? window_over_distance(sp, s, t - (xs - u))
                                                             : sg.at(s, t - lo, hi - t) / (xs - s);
            // With y = 0 the Lorentzian degenerates to the plain 1/(u-s) factor.
            o[0] = y > 0 ? w / (t * t + y2) : -w / t;
        };
        std::vector<double> br;
        double sc = y > 0 ? y : std::fabs(a);
        for (double b : graded_breaks(0.0, sc, lo, hi)) br.push_back(b);
        if (owns) {
            double c = xs - u;
            br.push_back(c);
            br.push_back(c - delta);
            br.push_back(c + delta);
            for (double b : graded_breaks(c, std::max(std::fabs(a), y), lo, hi)) br.push_back(b);
        }
        if (lo < 0 && hi > 0) br.push_back(0.0);
        K += integrate(g, 1, make_pieces(lo, hi, br, true, true), opt).value[0];
    }
    for (const Atom& at : m_.atom_list()) {
        double t = at.location - u;
        K += at.mass / ((xs - at.location) * (t * t + y * y));
    }
    if (y > 0) return a * (1.0 - tau_ * I) - tau_ * (a * a + y * y) * K;
    return a * (1.0 - tau_ * K);
}

LocalPoint SubordinationSolver::local_density(const SingularPoint& sp, double d) const {
    LocalPoint lp;
    lp.d = d;
    lp.u = sp.x_star;
    if (d == 0.0) {
        lp.y = y_solve(sp.x_star, 0.0);
        lp.psi = 0.0;
        return lp;
    }
    const double side = d > 0 ? 1.0 : -1.0;
    int si = m_.segment_of(sp.x_star);
    double len = si >= 0 ? m_.segments()[static_cast<size_t>(si)].b - m_.segments()[static_cast<size_t>(si)].a
                         : scale_;
    // g(eta) = side * (D(x* + side e^eta) - d) is increasing in eta.
    auto g = [&](double eta) { return side * (offset_from_critical(sp, sp.x_star + side * std::exp(eta)) - d); };
    double elo = std::log(1e-14 * len), ehi = std::log(1e-6 * len);
    double glo = g(elo);
    if (glo > 0) fail(Code::BracketFailure, "offset too small to resolve near the singular point");
    double ghi = g(ehi);
    while (ghi < 0) {
        elo = ehi;
        glo = ghi;
        ehi += 1.0;
        if (ehi > std::log(4 * scale_)) fail(Code::BracketFailure, "offset outside the local range");
        ghi = g(ehi);
    }
    std::uintmax_t iters = 200;
    auto r = boost::math::tools::toms748_solve(g, elo, ehi, glo, ghi, CloseEnough{1e-15}, iters);
    double eta = 0.5 * (r.first + r.second);
    lp.u = sp.x_star + side * std::exp(eta);
    double y = 0.0, I = 0.0;
    lp.d = offset_from_critical(sp, lp.u, &y, &I);
    lp.y = y;
    lp.psi = y > 0 ? y * I / std::numbers::pi : 0.0;
    return lp;
}

} // namespace freesing
