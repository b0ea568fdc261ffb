#include "measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "error.hpp"

namespace freesing {

namespace {

constexpr double kPi = std::numbers::pi;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "(%.17g)", v);
    return buf;
}

// Synthetic division of ascending coefficients by (s - r); returns quotient, sets rem.
std::vector<double> divide_root(const std::vector<double>& p, double r, double& rem) {
    size_t d = p.size() - 1;
    std::vector<double> q(d, 0.0);
    double carry = p[d];
    for (size_t i = d; i-- > 0;) {
        q[i] = carry;
        carry = p[i] + r * carry;
    }
    rem = carry;
    return q;
}

double poly_value(const std::vector<double>& p, double x) {
    double v = 0.0;
    for (size_t i = p.size(); i-- > 0;) v = v * x + p[i];
    return v;
}

std::string poly_text(const std::vector<double>& p) {
    // Horner form keeps the expression short and well conditioned.
    std::string t = num(p.back());
    for (size_t i = p.size() - 1; i-- > 0;) t = "(" + t + ")*s+" + num(p[i]);
    return t;
}

// Multiplicity of r as a root of p, with the quotient after removing it.
int root_multiplicity(std::vector<double> p, double r, std::vector<double>& quotient) {
    int m = 0;
    while (p.size() > 1) {
        double scale = 0.0;
        for (size_t i = 0; i < p.size(); ++i) scale += std::fabs(p[i]) * std::pow(std::fabs(r), double(i));
        double rem;
        auto q = divide_root(p, r, rem);
        if (std::fabs(rem) > 1e-12 * std::max(scale, 1e-300)) break;
        p = q;
        ++m;
    }
    quotient = p;
    return m;
}

} // namespace

const char* kind_name(SingularKind k) {
    switch (k) {
    case SingularKind::Interior: return "interior";
    case SingularKind::RightEdge: return "right_edge";
    case SingularKind::LeftEdge: return "left_edge";
    }
    return "?";
}

// ---------------------------------------------------------------- Potential

Potential::Potential(std::vector<double> coeffs) : c_(std::move(coeffs)) {
    while (c_.size() > 1 && c_.back() == 0.0) c_.pop_back();
    if (c_.size() < 3) fail(Code::InvalidArgument, "potential must have degree >= 2");
    if ((c_.size() - 1) % 2 != 0 || !(c_.back() > 0))
        fail(Code::InvalidArgument, "potential needs even degree and positive leading coefficient");
}

double Potential::derivative(double x, int order) const {
    double v = 0.0;
    for (size_t i = c_.size(); i-- > static_cast<size_t>(order);) {
        double f = 1.0;
        for (int j = 0; j < order; ++j) f *= static_cast<double>(i - static_cast<size_t>(j));
        v = v * x + f * c_[i];
    }
    return v;
}

cplx Potential::eval(cplx z) const {
    cplx v = 0.0;
    for (size_t i = c_.size(); i-- > 0;) v = v * z + c_[i];
    return v;
}

bool Potential::is_even() const {
    for (size_t i = 1; i < c_.size(); i += 2)
        if (c_[i] != 0.0) return false;
    return true;
}

// ---------------------------------------------------------------- Measure

Measure::Measure(std::vector<Segment> segments, std::vector<Atom> atoms, FamilyParams family,
                 double declared_mass)
    : segs_(std::move(segments)), atoms_(std::move(atoms)), family_(std::move(family)),
      mass_(declared_mass) {
    if (segs_.empty() && atoms_.empty()) fail(Code::InvalidArgument, "measure has no segments or atoms");
    if (!(mass_ > 0)) fail(Code::InvalidArgument, "declared mass must be positive");
    std::sort(segs_.begin(), segs_.end(), [](const Segment& x, const Segment& y) { return x.a < y.a; });
    for (size_t i = 0; i < segs_.size(); ++i) {
        Segment& sg = segs_[i];
        if (!(sg.b > sg.a)) fail(Code::InvalidArgument, "segment with b <= a");
        if (i > 0 && sg.a < segs_[i - 1].b) fail(Code::InvalidArgument, "segments overlap");
        if (sg.alpha_a < -0.5 || sg.alpha_b < -0.5)
            fail(Code::InvalidArgument, "edge exponents must be >= -1/2");
        double fmax = 0.0;
        for (int j = 1; j < 64; ++j) {
            double s = sg.a + (sg.b - sg.a) * j / 64.0;
            double v = sg.density(s);
            if (!std::isfinite(v)) fail(Code::InvalidArgument, "density not finite at s = " + std::to_string(s));
            fmax = std::max(fmax, std::fabs(v));
            if (v < -1e-14 * std::max(fmax, 1.0))
                fail(Code::InvalidArgument, "density negative at s = " + std::to_string(s));
        }
    }
    for (const Atom& at : atoms_)
        if (!(at.mass >= 0)) fail(Code::InvalidArgument, "atom mass must be >= 0");
    double total = integrate(*this, [](double) { return 1.0; });
    if (std::fabs(total - mass_) > 1e-10 * mass_)
        fail(Code::InvalidArgument, "total mass " + std::to_string(total) + " differs from declared " +
                                        std::to_string(mass_));
}

Measure Measure::semicircle(double tau) {
    if (!(tau > 0)) fail(Code::InvalidArgument, "semicircle variance must be positive");
    double r = 2.0 * std::sqrt(tau);
    Segment sg{-r, r,
               Expr::parse("sqrt(" + num(4 * tau) + "-s^2)/" + num(2 * kPi * tau)), 0.5, 0.5};
    sg.near = [tau](double, double da, double db) {
        return std::sqrt(std::max(da, 0.0) * std::max(db, 0.0)) / (2 * kPi * tau);
    };
    return Measure({sg}, {}, {"semicircle", {tau}});
}

Measure Measure::jacobi_power(double C, double alpha, double beta, double a, double b,
                              double declared_mass) {
    if (!(C > 0)) fail(Code::InvalidArgument, "jacobi_power scale must be positive");
    std::string t = num(C) + "*(s-" + num(a) + ")^" + num(alpha) + "*(" + num(b) + "-s)^" + num(beta);
    Segment sg{a, b, Expr::parse(t), alpha, beta};
    sg.near = [C, alpha, beta](double, double da, double db) {
        return C * std::pow(std::max(da, 0.0), alpha) * std::pow(std::max(db, 0.0), beta);
    };
    return Measure({sg}, {}, {"jacobi_power", {C, alpha, beta, a, b}}, declared_mass);
}

Measure Measure::poly_times_sqrt(std::vector<double> coeffs, double radius, double declared_mass) {
    if (coeffs.empty()) fail(Code::InvalidArgument, "empty polynomial");
    if (!(radius > 0)) fail(Code::InvalidArgument, "radius must be positive");
    while (coeffs.size() > 1 && coeffs.back() == 0.0) coeffs.pop_back();
    std::vector<double> q;
    double ea = 0.5 + root_multiplicity(coeffs, -radius, q);
    double eb = 0.5 + root_multiplicity(coeffs, radius, q);
    std::string t = "(" + poly_text(coeffs) + ")*sqrt(" + num(radius * radius) + "-s^2)";
    Segment sg{-radius, radius, Expr::parse(t), ea, eb};
    sg.near = [coeffs](double s, double da, double db) {
        double p = 0.0;
        for (size_t i = coeffs.size(); i-- > 0;) p = p * s + coeffs[i];
        return p * std::sqrt(std::max(da, 0.0) * std::max(db, 0.0));
    };
    std::vector<double> vals = coeffs;
    vals.push_back(radius);
    return Measure({sg}, {}, {"poly_times_sqrt", vals}, declared_mass);
}

Measure Measure::atoms(std::vector<Atom> atoms, double declared_mass) {
    std::sort(atoms.begin(), atoms.end(), [](const Atom& x, const Atom& y) { return x.location < y.location; });
    return Measure({}, std::move(atoms), {"atoms", {}}, declared_mass);
}

const SingularPoint* Measure::singular_at(double x, double tol) const {
    for (const SingularPoint& sp : singular_)
        if (std::fabs(sp.x_star - x) <= tol * std::max(1.0, std::fabs(x))) return &sp;
    return nullptr;
}

double Measure::support_lo() const {
    double lo = segs_.empty() ? INFINITY : segs_.front().a;
    for (const Atom& a : atoms_) lo = std::min(lo, a.location);
    return lo;
}

double Measure::support_hi() const {
    double hi = segs_.empty() ? -INFINITY : segs_.back().b;
    for (const Atom& a : atoms_) hi = std::max(hi, a.location);
    return hi;
}

int Measure::segment_of(double x) const {
    for (size_t i = 0; i < segs_.size(); ++i)
        if (x >= segs_[i].a && x <= segs_[i].b) return static_cast<int>(i);
    return -1;
}

double Measure::density(double s) const {
    int i = segment_of(s);
    if (i < 0) return 0.0;
    const Segment& sg = segs_[static_cast<size_t>(i)];
    if (s == sg.a || s == sg.b) {
        double alpha = (s == sg.a) ? sg.alpha_a : sg.alpha_b;
        if (alpha > 0) return 0.0;
    }
    return sg.density(s);
}

bool Measure::in_closed_support(double x, double tol) const {
    for (const Segment& sg : segs_)
        if (x >= sg.a - tol && x <= sg.b + tol) return true;
    for (const Atom& a : atoms_)
        if (std::fabs(x - a.location) <= tol && a.mass > 0) return true;
    return false;
}

QuadResult Measure::integrate_weighted(const std::function<void(double, double, double*)>& f, int dim,
                                       const std::vector<double>& breaks, const QuadOptions& opt) const {
    QuadResult total;
    total.value.assign(static_cast<size_t>(dim), 0.0);
    total.error.assign(static_cast<size_t>(dim), 0.0);
    for (const Segment& sg : segs_) {
        VecIntegrand g = [&](double s, double* out) { f(s, sg.density(s), out); };
        auto pieces = make_pieces(sg.a, sg.b, breaks, true, true);
        QuadResult r = integrate(g, dim, pieces, opt);
        for (size_t d = 0; d < static_cast<size_t>(dim); ++d) {
            total.value[d] += r.value[d];
            total.error[d] += r.error[d];
        }
        total.panels += r.panels;
    }
    std::vector<double> buf(static_cast<size_t>(dim));
    for (const Atom& a : atoms_) {
        f(a.location, a.mass, buf.data());
        for (size_t d = 0; d < static_cast<size_t>(dim); ++d) total.value[d] += buf[d];
    }
    return total;
}

Measure Measure::with_singular_point(const SingularPoint& sp) const {
    if (sp.k < 1) fail(Code::InvalidArgument, "singular order k must be a positive integer");
    if (!(sp.c0 > 0)) fail(Code::InvalidArgument, "c0 must be positive");
    if (sp.h.empty()) fail(Code::InvalidArgument, "missing h factor");
    int si = segment_of(sp.x_star);
    if (si < 0) fail(Code::InvalidArgument, "x_star outside the closed support");
    const Segment& sg = segs_[static_cast<size_t>(si)];
    if (sp.kind == SingularKind::RightEdge && sp.x_star != sg.b)
        fail(Code::InvalidArgument, "right_edge x_star must be a segment right endpoint");
    if (sp.kind == SingularKind::LeftEdge && sp.x_star != sg.a)
        fail(Code::InvalidArgument, "left_edge x_star must be a segment left endpoint");
    if (sp.kind == SingularKind::Interior && !(sp.x_star > sg.a && sp.x_star < sg.b))
        fail(Code::InvalidArgument, "interior x_star must lie strictly inside a segment");
    if (std::fabs(sp.h(sp.x_star) - 1.0) > 1e-9)
        fail(Code::InvalidArgument, "h factor must equal 1 at x_star");
    double delta = std::min((sg.b - sg.a) / 4, 0.1);
    double cpow = std::pow(sp.c0, sp.kappa() + 1);
    for (int side = -1; side <= 1; side += 2) {
        if (sp.kind == SingularKind::RightEdge && side > 0) continue;
        if (sp.kind == SingularKind::LeftEdge && side < 0) continue;
        for (int j = 1; j <= 16; ++j) {
            double d = delta * j / 16.0;
            double s = sp.x_star + side * d;
            double model = cpow * std::pow(d, sp.kappa()) * sp.h(s);
            double actual = sg.density(s);
            if (!(std::fabs(actual - model) <= 1e-6 * std::fabs(model)))
                fail(Code::InvalidArgument, "density does not match the declared local factorization at s = " +
                                                std::to_string(s));
        }
    }
    Measure out = *this;
    out.singular_.erase(std::remove_if(out.singular_.begin(), out.singular_.end(),
                                       [&](const SingularPoint& o) { return o.x_star == sp.x_star; }),
                        out.singular_.end());
    out.singular_.push_back(sp);
    return out;
}

SingularPoint Measure::derive_singular(double x, std::optional<SingularKind> want) const {
    SingularPoint sp;
    sp.x_star = x;
    const auto& v = family_.values;
    if (family_.name == "poly_times_sqrt") {
        double R = v.back();
        std::vector<double> P(v.begin(), v.end() - 1);
        std::vector<double> Q;
        int m = root_multiplicity(P, x, Q);
        bool right = x == R, left = x == -R;
        if (m < 2 || m % 2 != 0)
            fail(Code::InvalidArgument, "polynomial factor has no even-order zero at x_star");
        sp.k = m / 2;
        double q0 = poly_value(Q, x);
        if (right || left) {
            sp.kind = right ? SingularKind::RightEdge : SingularKind::LeftEdge;
            double cp = q0 * std::sqrt(2 * R);
            if (!(cp > 0)) fail(Code::InvalidArgument, "density factor is not positive at x_star");
            sp.c0 = std::pow(cp, 1.0 / (sp.kappa() + 1));
            std::string other = right ? "sqrt(" + num(R) + "+s)" : "sqrt(" + num(R) + "-s)";
            sp.h = Expr::parse("(" + poly_text(Q) + ")*" + other + "/" + num(cp));
        } else {
            if (!(x > -R && x < R)) fail(Code::InvalidArgument, "x_star outside support");
            sp.kind = SingularKind::Interior;
            double cp = q0 * std::sqrt(R * R - x * x);
            if (!(cp > 0)) fail(Code::InvalidArgument, "density factor is not positive at x_star");
            sp.c0 = std::pow(cp, 1.0 / (2 * sp.k + 1));
            sp.h = Expr::parse("(" + poly_text(Q) + ")*sqrt(" + num(R * R) + "-s^2)/" + num(cp));
        }
    } else if (family_.name == "jacobi_power") {
        double C = v[0], alpha = v[1], beta = v[2], a = v[3], b = v[4];
        if (x == b) {
            double k2 = (beta - 0.5) / 2;
            if (k2 < 1 || k2 != std::floor(k2))
                fail(Code::InvalidArgument, "right exponent is not of the form 2k+1/2");
            sp.kind = SingularKind::RightEdge;
            sp.k = static_cast<int>(k2);
            double cp = C * std::pow(b - a, alpha);
            sp.c0 = std::pow(cp, 1.0 / (sp.kappa() + 1));
            sp.h = Expr::parse("((s-" + num(a) + ")/" + num(b - a) + ")^" + num(alpha));
        } else if (x == a) {
            double k2 = (alpha - 0.5) / 2;
            if (k2 < 1 || k2 != std::floor(k2))
                fail(Code::InvalidArgument, "left exponent is not of the form 2k+1/2");
            sp.kind = SingularKind::LeftEdge;
            sp.k = static_cast<int>(k2);
            double cp = C * std::pow(b - a, beta);
            sp.c0 = std::pow(cp, 1.0 / (sp.kappa() + 1));
            sp.h = Expr::parse("((" + num(b) + "-s)/" + num(b - a) + ")^" + num(beta));
        } else {
            fail(Code::InvalidArgument, "jacobi_power has singular points only at its endpoints");
        }
    } else {
        fail(Code::InvalidArgument, "family '" + family_.name + "' cannot derive a singular factorization; "
                                    "supply h explicitly");
    }
    if (want && *want != sp.kind)
        fail(Code::InvalidArgument, std::string("declared kind ") + kind_name(*want) +
                                        " does not match the density (" + kind_name(sp.kind) + ")");
    return sp;
}

// ---------------------------------------------------------------- integrals

double integrate(const Measure& m, const Expr& f) {
    return integrate(m, [&f](double s) { return f(s); });
}

double integrate(const Measure& m, const std::function<double(double)>& f) {
    QuadOptions opt;
    opt.rel_tol = 1e-13;
    auto r = m.integrate_weighted([&](double s, double w, double* out) { out[0] = w * f(s); }, 1, {}, opt);
    return r.value[0];
}

LorentzIntegrals lorentz_integrals(const Measure& m, double u, double y, bool want_j, bool want_r) {
    if (!(y > 0)) fail(Code::InvalidArgument, "lorentz_integrals needs y > 0");
    LorentzIntegrals out{0.0, 0.0, 0.0};
    const double y2 = y * y;
    QuadOptions opt;
    for (const Segment& sg : m.segments()) {
        // Integrate in t = s - u so distances to the near-pole are exact.
        const double lo = sg.a - u, hi = sg.b - u;
        bool inside = lo < 0 && hi > 0;
        double f0 = inside ? sg.at(u, -lo, hi) : 0.0;
        VecIntegrand g = [&](double t, double* o) {
            double q = 1.0 / (t * t + y2);
            double psi = sg.at(u + t, t - lo, hi - t);
            o[0] = psi * q;
            o[1] = want_j ? psi * q * q : 0.0;
            // Subtracting psi(u) removes the principal-value cancellation in R.
            o[2] = want_r ? -(psi - f0) * t * q : 0.0;
        };
        std::vector<double> br = graded_breaks(0.0, y, lo, hi);
        if (inside) br.push_back(0.0);
        QuadResult r = integrate(g, 3, make_pieces(lo, hi, br, true, true), opt);
        out.I += r.value[0];
        out.J += r.value[1];
        out.R += r.value[2];
        if (inside) out.R += f0 * 0.5 * std::log((lo * lo + y2) / (hi * hi + y2));
    }
    for (const Atom& a : m.atom_list()) {
        double d = u - a.location;
        double q = 1.0 / (d * d + y2);
        out.I += a.mass * q;
        out.J += a.mass * q * q;
        out.R += a.mass * d * q;
    }
    return out;
}

cplx cauchy_transform(const Measure& m, cplx z) {
    double x = z.real(), y = z.imag();
    if (y != 0.0) {
        auto L = lorentz_integrals(m, x, std::fabs(y), false, true);
        return {L.R, -y * L.I};
    }
    double scale = std::max({1.0, std::fabs(m.support_lo()), std::fabs(m.support_hi())});
    if (m.in_closed_support(x, 1e-14 * scale))
        fail(Code::OnSupport, "real point " + std::to_string(x) + " lies on the support");
    auto r = m.integrate_weighted([&](double s, double w, double* o) { o[0] = w / (x - s); }, 1);
    return {r.value[0], 0.0};
}

namespace {

// Integrand for g_j with the declared factor divided out near x*.
double gj_window(const SingularPoint& sp, double s, int j) {
    double cp = std::pow(sp.c0, sp.kappa() + 1);
    double d = s - sp.x_star;
    switch (sp.kind) {
    case SingularKind::Interior: {
        int p = 2 * sp.k - 1 - j;
        return cp * std::pow(d, p) * sp.h(s);
    }
    case SingularKind::RightEdge:
        return ((j + 1) % 2 ? -1.0 : 1.0) * cp * std::pow(-d, sp.kappa() - j - 1) * sp.h(s);
    case SingularKind::LeftEdge:
        return cp * std::pow(d, sp.kappa() - j - 1) * sp.h(s);
    }
    return 0.0;
}

} // namespace

double moment_g(const Measure& m, double x, int j) {
    if (j < 0) fail(Code::InvalidArgument, "moment index must be >= 0");
    const SingularPoint* sp = m.singular_at(x);
    QuadOptions opt;
    opt.rel_tol = 1e-13;
    if (!sp) {
        double scale = std::max({1.0, std::fabs(m.support_lo()), std::fabs(m.support_hi())});
        if (m.in_closed_support(x, 1e-14 * scale))
            fail(Code::Divergent, "inverse moment at a support point without a singular declaration");
        auto r = m.integrate_weighted(
            [&](double s, double w, double* o) { o[0] = w / std::pow(s - x, j + 1); }, 1, {}, opt);
        return r.value[0];
    }
    int jmax = sp->kind == SingularKind::Interior ? 2 * sp->k - 1 : 2 * sp->k;
    if (j > jmax)
        fail(Code::Divergent, "g_" + std::to_string(j) + " diverges for the declared exponent");
    double total = 0.0;
    for (const Segment& sg : m.segments()) {
        bool owns = x >= sg.a && x <= sg.b;
        double delta = std::min((sg.b - sg.a) / 4, 0.1);
        VecIntegrand g = [&](double s, double* o) {
            if (owns && std::fabs(s - x) <= delta) o[0] = gj_window(*sp, s, j);
            else o[0] = sg.density(s) / std::pow(s - x, j + 1);
        };
        std::vector<double> br;
        if (owns) br = {x - delta, x, x + delta};
        total += integrate(g, 1, make_pieces(sg.a, sg.b, br, true, true), opt).value[0];
    }
    for (const Atom& a : m.atom_list()) total += a.mass / std::pow(a.location - x, j + 1);
    return total;
}

double principal_value_h(const Measure& m, const SingularPoint& sp) {
    if (sp.kind != SingularKind::Interior)
        fail(Code::WrongKind, "principal value of h is defined for interior points only");
    const double x = sp.x_star;
    const double h0 = sp.h(x);
    QuadOptions opt;
    opt.rel_tol = 1e-13;
    double total = 0.0;
    for (const Segment& sg : m.segments()) {
        bool owns = x > sg.a && x < sg.b;
        VecIntegrand g = [&](double s, double* o) {
            o[0] = owns ? (sp.h(s) - h0) / (x - s) : sp.h(s) / (x - s);
        };
        std::vector<double> br;
        if (owns) br.push_back(x);
        total += integrate(g, 1, make_pieces(sg.a, sg.b, br, true, true), opt).value[0];
        if (owns) total += h0 * std::log((x - sg.a) / (sg.b - x));
    }
    return total;
}

double moment_g_real_part(const Measure& m, double x, int j) {
    const SingularPoint* sp = m.singular_at(x);
    if (!sp || sp->kind != SingularKind::Interior || j != 2 * sp->k)
        return moment_g(m, x, j);
    // Window part is c0^{2k+1} PV int h/(s-x*); outside the window the density is used as is.
    QuadOptions opt;
    opt.rel_tol = 1e-13;
    double cp = std::pow(sp->c0, sp->kappa() + 1);
    double h0 = sp->h(x);
    double total = 0.0;
    for (const Segment& sg : m.segments()) {
        bool owns = x > sg.a && x < sg.b;
        double delta = std::min((sg.b - sg.a) / 4, 0.1);
        double wa = std::max(sg.a, x - delta), wb = std::min(sg.b, x + delta);
        VecIntegrand g = [&](double s, double* o) {
            if (owns && s >= wa && s <= wb) o[0] = cp * (sp->h(s) - h0) / (s - x);
            else o[0] = sg.density(s) / std::pow(s - x, j + 1);
        };
        std::vector<double> br;
        if (owns) br = {wa, x, wb};
        total += integrate(g, 1, make_pieces(sg.a, sg.b, br, true, true), opt).value[0];
        if (owns) total += cp * h0 * std::log((wb - x) / (x - wa));
    }
    for (const Atom& a : m.atom_list()) total += a.mass / std::pow(a.location - x, j + 1);
    return total;
}

double check_equilibrium(const Measure& m, const Potential& V, const std::vector<double>& grid) {
    if (grid.empty()) return 0.0;
    QuadOptions opt;
    opt.rel_tol = 1e-13;
    auto lhs = [&](double x) {
        double total = 0.0;
        for (const Segment& sg : m.segments()) {
            bool inside = x > sg.a && x < sg.b;
            double f0 = inside ? sg.density(x) : 0.0;
            VecIntegrand g = [&](double s, double* o) {
                double d = std::fabs(x - s);
                o[0] = d > 0 ? (sg.density(s) - f0) * std::log(d) : 0.0;
            };
            std::vector<double> br;
            if (inside) br.push_back(x);
            total += integrate(g, 1, make_pieces(sg.a, sg.b, br, true, true), opt).value[0];
            if (inside) {
                double p = x - sg.a, q = sg.b - x;
                total += f0 * (p * std::log(p) - p + q * std::log(q) - q);
            }
        }
        for (const Atom& a : m.atom_list()) total += a.mass * std::log(std::fabs(x - a.location));
        return 2.0 * total - V(x);
    };
    double ell = lhs(grid.front());
    double worst = 0.0;
    for (double x : grid) worst = std::max(worst, std::fabs(lhs(x) - ell));
    return worst;
}

double v_derivative_identity(const Measure& m, const SingularPoint& sp, const Potential& V, int l) {
    if (l < 1 || l > 2 * sp.k) fail(Code::OutOfRange, "l must satisfy 1 <= l <= 2k");
    double fact = std::tgamma(static_cast<double>(l));
    return std::fabs(V.derivative(sp.x_star, l) + 2.0 * fact * moment_g(m, sp.x_star, l - 1));
}

} // namespace freesing
