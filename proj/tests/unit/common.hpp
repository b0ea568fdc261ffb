#pragma once

#include <cmath>
#include <numbers>

#include "measure.hpp"

namespace fixtures {

using namespace freesing;
constexpr double pi = std::numbers::pi;

// (1/2pi) s^2 sqrt(4 - s^2): equilibrium measure of x^4/4 - x^2.
inline Measure quartic(bool singular = true) {
    Measure m = Measure::poly_times_sqrt({0, 0, 1 / (2 * pi)}, 2.0);
    return singular ? m.with_singular_point(m.derive_singular(0.0)) : m;
}
inline Potential quartic_potential() { return Potential({0, 0, -1, 0, 0.25}); }

// (1/4pi) s^4 sqrt(4 - s^2), with g2 = 0 at tau_crit = 2.
inline Measure k2_symmetric() {
    Measure m = Measure::poly_times_sqrt({0, 0, 0, 0, 1 / (4 * pi)}, 2.0);
    return m.with_singular_point(m.derive_singular(0.0));
}

// s^4 (1 + b s) sqrt(4 - s^2) / (4 pi); b = +-0.3 gives the two mirror images.
inline Measure k2_asymmetric(double b) {
    Measure m = Measure::poly_times_sqrt({0, 0, 0, 0, 1 / (4 * pi), b / (4 * pi)}, 2.0);
    return m.with_singular_point(m.derive_singular(0.0));
}

// (4/5pi) (1 - s)^{5/2} (1 + s)^{1/2} on [-1, 1]; total mass 1/2.
inline Measure edge(bool singular = true) {
    Measure m = Measure::jacobi_power(4 / (5 * pi), 0.5, 2.5, -1, 1, 0.5);
    return singular ? m.with_singular_point(m.derive_singular(1.0)) : m;
}

inline Measure two_atom() { return Measure::atoms({{-1, 0.5}, {1, 0.5}}); }

inline double semicircle_density(double tau, double x) {
    double r = 4 * tau - x * x;
    return r > 0 ? std::sqrt(r) / (2 * pi * tau) : 0.0;
}

} // namespace fixtures
