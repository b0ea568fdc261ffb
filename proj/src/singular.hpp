#pragma once

#include <string>
#include <utility>
#include <vector>

#include "freeconv.hpp"
#include "measure.hpp"

namespace freesing {

enum class CaseLabel { Subcritical, I, IIPlus, IIMinus, III, IV, V };
const char* case_name(CaseLabel c);

enum class Side { Left, Right, Both };
const char* side_name(Side s);

struct CriticalData {
    SingularPoint spec;
    double kappa = 0.0;
    double gamma = 0.0;
    double tau = 0.0;
    double tau_crit = 0.0;
    double x_star_tau_crit = 0.0;
    double x_star_tau = 0.0;
    // g_0 .. g_{2k}; for interior points the last entry is the real (principal) part.
    std::vector<double> g;
    // Only defined for interior k = 1 (NaN otherwise).
    double pv = 0.0, r = 0.0, theta = 0.0;
    // NaN where the moment diverges.
    double g2 = 0.0, g3 = 0.0;
    CaseLabel label = CaseLabel::Subcritical;

    double c_tau(double t) const;  // tau_crit c0 / (tau_crit - t)
};

struct PowerLaw {
    double exponent = 0.0;
    double prefactor = 0.0;
    Side side = Side::Both;
    double window_lo = 0.0, window_hi = 0.0;
    double residual = 0.0;
};

// A point is critical when |tau - tau_crit| <= 1e-9 tau_crit.
CriticalData classify(const Measure& m, const SingularPoint& sp, double tau);

PowerLaw predicted_local_law(const CriticalData& cd, double tau, Side side);

// Log-log least squares over the samples (distance, psi) with distance in [lo, hi].
PowerLaw fit_power_law(const std::vector<std::pair<double, double>>& samples, double lo, double hi);

// Samples of psi_tau at x*_tau -/+ d for `count` log-spaced d in [lo, hi].
// Returned distances are the offsets actually reached by the boundary solve.
std::vector<std::pair<double, double>> local_samples(const SubordinationSolver& solver,
                                                     const SingularPoint& sp, Side side, double lo,
                                                     double hi, int count = 32);

} // namespace freesing
