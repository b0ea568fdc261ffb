#pragma once

#include <vector>

#include "measure.hpp"

namespace freesing {

double tau_crit(const Measure& m, double x_star);
double x_star_tau(const Measure& m, double x_star, double tau);

struct BoundaryPoint {
    double u = 0.0;    // real parameter
    double y = 0.0;    // y_tau(u)
    double rho = 0.0;  // u + tau Re G(u + i y)
    double I = 0.0;    // int dmu/((u-s)^2 + y^2), when y > 0
};

struct DensityProfile {
    double tau = 0.0;
    std::vector<double> grid;
    std::vector<double> psi;
    double x_star_tau = 0.0;  // NaN without a declared singular point
};

// psi_tau at x*_tau + d, evaluated through the boundary parameter u.
struct LocalPoint {
    double d = 0.0;
    double u = 0.0;
    double y = 0.0;
    double psi = 0.0;
};

class SubordinationSolver {
public:
    SubordinationSolver(Measure m, double tau);

    const Measure& measure() const { return m_; }
    double tau() const { return tau_; }
    const std::vector<BoundaryPoint>& cache() const { return cache_; }

    double y_tau(double u) const;
    BoundaryPoint boundary(double u) const;
    // F_tau(x); residual of the boundary equation is checked against 1e-9.
    cplx subordinate(double x) const;
    double density(double x) const;
    DensityProfile density(const std::vector<double>& grid) const;
    bool rightmost_flat_check(double x_star) const;

    // Offset form of rho(u) - x*_tau that keeps relative accuracy for u near x*.
    double offset_from_critical(const SingularPoint& sp, double u, double* y_out = nullptr,
                                double* I_out = nullptr) const;
    LocalPoint local_density(const SingularPoint& sp, double d) const;

private:
    double y_solve(double u, double hint) const;
    double inverse_moment_at(double u) const;  // int dmu/(u-s)^2, +inf if divergent
    double real_cauchy(double u) const;        // G(u) for real u with y_tau(u) = 0

    Measure m_;
    double tau_;
    double scale_;
    std::vector<BoundaryPoint> cache_;
};

} // namespace freesing
