#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "expr.hpp"
#include "quadrature.hpp"

namespace freesing {

using cplx = std::complex<double>;

struct Segment {
    double a = 0.0, b = 0.0;
    Expr density;
    // Power-law behaviour of the density at a and b.
    double alpha_a = 0.0, alpha_b = 0.0;
    // Optional closed form taking the exact distances da = s - a, db = b - s,
    // so shifted-variable integrands keep relative accuracy next to the ends.
    std::function<double(double, double, double)> near;

    double at(double s, double da, double db) const { return near ? near(s, da, db) : density(s); }
};

struct Atom {
    double location = 0.0;
    double mass = 0.0;
};

enum class SingularKind { Interior, RightEdge, LeftEdge };

const char* kind_name(SingularKind k);

struct SingularPoint {
    double x_star = 0.0;
    SingularKind kind = SingularKind::Interior;
    int k = 1;
    double c0 = 0.0;
    Expr h;

    double kappa() const { return kind == SingularKind::Interior ? 2.0 * k : 2.0 * k + 0.5; }
    double gamma() const { return 1.0 / (kappa() + 1.0); }
};

// Builtin-family parameters kept so singular factorizations can be derived.
struct FamilyParams {
    std::string name;             // semicircle, jacobi_power, poly_times_sqrt, atoms, expression
    std::vector<double> values;   // family-specific numbers
};

class Potential {
public:
    Potential() = default;
    explicit Potential(std::vector<double> coeffs);  // ascending powers

    double operator()(double x) const { return derivative(x, 0); }
    double derivative(double x, int order) const;
    cplx eval(cplx z) const;
    const std::vector<double>& coefficients() const { return c_; }
    int degree() const { return static_cast<int>(c_.size()) - 1; }
    bool is_even() const;

private:
    std::vector<double> c_;
};

class Measure {
public:
    // Validates ordering, non-negativity and mass. declared_mass is the
    // expected total (1 for probability measures).
    Measure(std::vector<Segment> segments, std::vector<Atom> atoms, FamilyParams family,
            double declared_mass = 1.0);

    static Measure semicircle(double tau);
    static Measure jacobi_power(double C, double alpha, double beta, double a, double b,
                                double declared_mass = 1.0);
    static Measure poly_times_sqrt(std::vector<double> coeffs, double radius,
                                   double declared_mass = 1.0);
    static Measure atoms(std::vector<Atom> atoms, double declared_mass = 1.0);

    // Returns a copy carrying the singular point; verifies the local factorization.
    Measure with_singular_point(const SingularPoint& sp) const;
    // Builds the factorization for builtin families (poly_times_sqrt, jacobi_power).
    SingularPoint derive_singular(double x_star, std::optional<SingularKind> kind = {}) const;

    const std::vector<Segment>& segments() const { return segs_; }
    const std::vector<Atom>& atom_list() const { return atoms_; }
    const std::vector<SingularPoint>& singular_points() const { return singular_; }
    const SingularPoint* singular_at(double x, double tol = 0.0) const;
    const FamilyParams& family() const { return family_; }
    double mass() const { return mass_; }
    double support_lo() const;
    double support_hi() const;
    double density(double s) const;  // absolutely continuous part
    bool in_closed_support(double x, double tol = 0.0) const;
    // Index of the segment whose closed interval contains x, or -1.
    int segment_of(double x) const;

    // Sum over segments of integral of psi0(s) g(s) plus atoms mass*g(loc).
    // f(s, w, out) must write w*g(s) into out.
    QuadResult integrate_weighted(const std::function<void(double, double, double*)>& f, int dim,
                                  const std::vector<double>& breaks = {},
                                  const QuadOptions& opt = {}) const;

private:
    std::vector<Segment> segs_;
    std::vector<Atom> atoms_;
    std::vector<SingularPoint> singular_;
    FamilyParams family_;
    double mass_ = 1.0;
};

double integrate(const Measure& m, const Expr& f);
double integrate(const Measure& m, const std::function<double(double)>& f);
cplx cauchy_transform(const Measure& m, cplx z);

// Lorentz-type integrals at (u, y) with y > 0:
//   I = int dmu/((u-s)^2+y^2), J = int dmu/((u-s)^2+y^2)^2, R = int (u-s) dmu/((u-s)^2+y^2).
struct LorentzIntegrals {
    double I, J, R;
};
LorentzIntegrals lorentz_integrals(const Measure& m, double u, double y, bool want_j = true,
                                   bool want_r = true);

// g_j = int dmu/(s-x*)^{j+1}. Uses the declared factorization near x* when present.
double moment_g(const Measure& m, double x_star, int j);
// Real part of g_{2k} for an interior point: c0^{2k+1} PV int h(s)/(s-x*) ds.
double moment_g_real_part(const Measure& m, double x_star, int j);
double principal_value_h(const Measure& m, const SingularPoint& sp);
double check_equilibrium(const Measure& m, const Potential& V, const std::vector<double>& grid);
double v_derivative_identity(const Measure& m, const SingularPoint& sp, const Potential& V, int l);

} // namespace freesing
