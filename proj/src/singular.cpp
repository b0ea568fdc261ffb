#include "singular.hpp"

#include <cmath>
#include <limits>

#include "error.hpp"

namespace freesing {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kCritTol = 1e-9;
constexpr double kZeroG2 = 1e-9;

bool is_critical(double tau, double tc) { return std::fabs(tau - tc) <= kCritTol * tc; }

PowerLaw law(double exponent, double prefactor, Side side) {
    PowerLaw p;
    p.exponent = exponent;
    p.prefactor = prefactor;
    p.side = side;
    return p;
}

Side flip(Side s) { return s == Side::Left ? Side::Right : s == Side::Right ? Side::Left : s; }

} // namespace

const char* case_name(CaseLabel c) {
    switch (c) {
    case CaseLabel::Subcritical: return "Subcritical";
    case CaseLabel::I: return "I";
    case CaseLabel::IIPlus: return "II+";
    case CaseLabel::IIMinus: return "II-";
    case CaseLabel::III: return "III";
    case CaseLabel::IV: return "IV";
    case CaseLabel::V: return "V";
    }
    return "?";
}

const char* side_name(Side s) {
    switch (s) {
    case Side::Left: return "left";
    case Side::Right: return "right";
    case Side::Both: return "both";
    }
    return "?";
}

double CriticalData::c_tau(double t) const { return tau_crit * spec.c0 / (tau_crit - t); }

CriticalData classify(const Measure& m, const SingularPoint& sp, double tau) {
    if (!(tau > 0)) fail(Code::InvalidArgument, "tau must be positive");
    const SingularPoint* own = m.singular_at(sp.x_star);
    if (!own || own->kind != sp.kind || own->k != sp.k)
        fail(Code::InvalidArgument, "singular point is not declared on the measure");

    CriticalData cd;
    cd.spec = *own;
    cd.kappa = sp.kappa();
    cd.gamma = sp.gamma();
    cd.tau = tau;
    cd.tau_crit = tau_crit(m, sp.x_star);
    if (tau > cd.tau_crit && !is_critical(tau, cd.tau_crit))
        fail(Code::OutOfRange, "tau = " + std::to_string(tau) + " exceeds tau_crit = " +
                                   std::to_string(cd.tau_crit));
    cd.x_star_tau_crit = x_star_tau(m, sp.x_star, cd.tau_crit);
    cd.x_star_tau = x_star_tau(m, sp.x_star, tau);

    const bool interior = sp.kind == SingularKind::Interior;
    const int top = 2 * sp.k;
    for (int j = 0; j <= top; ++j)
        cd.g.push_back(interior && j == top ? moment_g_real_part(m, sp.x_star, j)
                                            : moment_g(m, sp.x_star, j));

    cd.pv = cd.r = cd.theta = kNaN;
    cd.g2 = cd.g3 = kNaN;
    if (interior && sp.k == 1) {
        cd.pv = principal_value_h(m, *own);
        cd.r = std::sqrt(cd.pv * cd.pv + kPi * kPi);
        cd.theta = 0.5 * kPi - std::atan(cd.pv / kPi);
    } else {
        cd.g2 = cd.g[2];
        if (cd.g.size() > 3) cd.g3 = cd.g[3];
    }

    if (!is_critical(tau, cd.tau_crit)) {
        cd.label = CaseLabel::Subcritical;
        return cd;
    }
    if (interior) {
        if (sp.k == 1) cd.label = CaseLabel::I;
        else if (std::fabs(cd.g2) < kZeroG2) cd.label = CaseLabel::III;
        else cd.label = cd.g2 > 0 ? CaseLabel::IIPlus : CaseLabel::IIMinus;
    } else {
        // A left edge is the mirror image of a right edge; g2 changes sign.
        double g2r = sp.kind == SingularKind::RightEdge ? cd.g2 : -cd.g2;
        if (std::fabs(g2r) < kZeroG2)
            fail(Code::Unclassified, "edge point with g2 = 0 at criticality is not covered");
        cd.label = g2r < 0 ? CaseLabel::IV : CaseLabel::V;
    }
    return cd;
}

PowerLaw predicted_local_law(const CriticalData& cd, double tau, Side side) {
    const SingularPoint& sp = cd.spec;
    const double tc = cd.tau_crit, c0 = sp.c0;
    const int k = sp.k;
    const bool crit = is_critical(tau, tc);
    if ((cd.label == CaseLabel::Subcritical) == crit || !(tau > 0) || tau > tc * (1 + kCritTol))
        fail(Code::InvalidArgument, "tau is inconsistent with case " + std::string(case_name(cd.label)));

    // Edge laws are stated for a right edge; a left edge is handled by reflection.
    Side s = sp.kind == SingularKind::LeftEdge ? flip(side) : side;
    auto undefined = [&]() -> PowerLaw {
        fail(Code::SideUndefined, std::string("density vanishes identically on the ") +
                                      side_name(side) + " side in case " + case_name(cd.label));
    };
    auto need_side = [&]() {
        if (side == Side::Both)
            fail(Code::InvalidArgument,
                 std::string("case ") + case_name(cd.label) + " has different laws on each side");
    };

    switch (cd.label) {
    case CaseLabel::Subcritical: {
        double ct = cd.c_tau(tau);
        if (sp.kind == SingularKind::Interior) return law(2.0 * k, std::pow(ct, 2.0 * k + 1), side);
        need_side();
        if (s == Side::Right) return undefined();
        return law(2.0 * k + 0.5, std::pow(ct, 2.0 * k + 1.5), side);
    }
    case CaseLabel::I: {
        double base = kPi * std::pow(tc, 1.5) * std::pow(c0, 1.5) * std::sqrt(cd.r);
        double left = std::cos(0.5 * cd.theta) / base, right = std::sin(0.5 * cd.theta) / base;
        if (side == Side::Both) {
            if (std::fabs(left - right) > 1e-12 * left) need_side();
            return law(0.5, left, side);
        }
        return law(0.5, s == Side::Left ? left : right, side);
    }
    case CaseLabel::IIPlus:
    case CaseLabel::IIMinus: {
        need_side();
        double g2 = std::fabs(cd.g2);
        bool steep = (cd.label == CaseLabel::IIPlus) == (s == Side::Left);
        if (steep) return law(k - 0.5, std::pow(c0, 2.0 * k + 1) / (2 * std::pow(tc * g2, k + 0.5)), side);
        return law(0.5, 1.0 / (kPi * std::pow(tc, 1.5) * std::sqrt(g2)), side);
    }
    case CaseLabel::III:
        return law(1.0 / 3.0, std::sqrt(3.0) / (2 * kPi * std::pow(tc, 4.0 / 3.0) * std::cbrt(cd.g3)), side);
    case CaseLabel::IV:
        need_side();
        if (s == Side::Right) return undefined();
        return law(0.5, 1.0 / (kPi * std::pow(tc, 1.5) * std::sqrt(std::fabs(cd.g2))), side);
    case CaseLabel::V: {
        need_side();
        double g2 = std::fabs(cd.g2);
        if (s == Side::Left)
            return law(k - 0.25, std::pow(c0, 2.0 * k + 1.5) / (2 * std::pow(tc * g2, k + 0.75)), side);
        return law(0.5, 1.0 / (kPi * std::pow(tc, 1.5) * std::sqrt(g2)), side);
    }
    }
    fail(Code::Internal, "unhandled case label");
}

PowerLaw fit_power_law(const std::vector<std::pair<double, double>>& samples, double lo, double hi) {
    if (!(lo > 0) || !(hi > lo)) fail(Code::InvalidArgument, "fit window must satisfy 0 < lo < hi");
    std::vector<std::pair<double, double>> in;
    for (const auto& [d, p] : samples) {
        if (!(d >= lo * (1 - 1e-9) && d <= hi * (1 + 1e-9))) continue;
        if (!(p > 0)) fail(Code::NonPositive, "non-positive density sample at distance " + std::to_string(d));
        in.emplace_back(std::log(d), std::log(p));
    }
    if (in.size() < 8)
        fail(Code::InsufficientSamples, "need at least 8 samples in the window, have " +
                                            std::to_string(in.size()));
    double mx = 0, my = 0;
    for (const auto& [x, y] : in) mx += x, my += y;
    mx /= in.size();
    my /= in.size();
    double sxx = 0, sxy = 0;
    for (const auto& [x, y] : in) sxx += (x - mx) * (x - mx), sxy += (x - mx) * (y - my);
    if (!(sxx > 0)) fail(Code::InsufficientSamples, "samples do not span a distance range");

    PowerLaw p;
    p.exponent = sxy / sxx;
    double icept = my - p.exponent * mx;
    p.prefactor = std::exp(icept);
    p.window_lo = lo;
    p.window_hi = hi;
    for (const auto& [x, y] : in)
        p.residual = std::max(p.residual, std::fabs(std::expm1(icept + p.exponent * x - y)));
    return p;
}

std::vector<std::pair<double, double>> local_samples(const SubordinationSolver& solver,
                                                     const SingularPoint& sp, Side side, double lo,
                                                     double hi, int count) {
    if (side == Side::Both) fail(Code::InvalidArgument, "sample one side at a time");
    if (!(lo > 0) || !(hi > lo) || count < 2) fail(Code::InvalidArgument, "bad sampling window");
    const double sign = side == Side::Left ? -1.0 : 1.0;
    std::vector<std::pair<double, double>> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        double d = lo * std::pow(hi / lo, double(i) / (count - 1));
        LocalPoint lp = solver.local_density(sp, sign * d);
        out.emplace_back(std::fabs(lp.d), lp.psi);
    }
    return out;
}

} // namespace freesing
