#include <doctest.h>

#include "common.hpp"
#include "error.hpp"
#include "freeconv.hpp"

using namespace freesing;
using namespace fixtures;

TEST_SUITE("freeconv") {

TEST_CASE("critical constants") {
    CHECK(std::fabs(tau_crit(quartic(), 0) - 1) < 1e-9);
    CHECK(std::fabs(tau_crit(two_atom(), 0) - 1) < 1e-14);
    CHECK(std::fabs(tau_crit(edge(), 1) - 2.5) < 1e-8);
    CHECK(std::fabs(x_star_tau(quartic(), 0, 0.7)) < 1e-12);
    CHECK(std::fabs(x_star_tau(edge(), 1, 2.5) - 2) < 1e-9);
    // x*_tau = x* + tau V'(x*)/2 for the quartic pair; V'(0) = 0.
    CHECK(std::fabs(x_star_tau(quartic(), 0, 0.4) - 0.4 * quartic_potential().derivative(0, 1) / 2) < 1e-12);
}

TEST_CASE("boundary function y_tau") {
    SubordinationSolver s2(two_atom(), 2.0);
    CHECK(std::fabs(s2.y_tau(0) - 1) < 1e-9);
    CHECK(SubordinationSolver(two_atom(), 1.0).y_tau(0) == 0.0);
    CHECK(SubordinationSolver(two_atom(), 0.5).y_tau(0) == 0.0);
    CHECK(SubordinationSolver(quartic(), 0.5).y_tau(10.0) == 0.0);
    // Closed form for the semicircle: I(u, y) = 1/tau at y_tau(u).
    SubordinationSolver ss(Measure::semicircle(1.0), 3.0);
    for (double u : {-0.9, 0.0, 0.37, 1.5}) {
        double y = ss.y_tau(u);
        auto L = lorentz_integrals(Measure::semicircle(1.0), u, y, false, false);
        CHECK(std::fabs(L.I * 3.0 - 1) < 1e-9);
    }
}

TEST_CASE("subordination function") {
    cplx F = SubordinationSolver(two_atom(), 2.0).subordinate(0);
    CHECK(std::fabs(F.real()) < 1e-9);
    CHECK(std::fabs(F.imag() - 1) < 1e-9);
    F = SubordinationSolver(Measure::semicircle(1.0), 3.0).subordinate(0);
    CHECK(std::fabs(F.imag() - 1.5) < 1e-9);
    // The image of x*_tau is x* itself.
    for (double tau : {0.3, 1.0}) {
        F = SubordinationSolver(quartic(), tau).subordinate(0);
        CHECK(std::abs(F) < 1e-9);
    }
    F = SubordinationSolver(edge(), 1.0).subordinate(x_star_tau(edge(), 1, 1.0));
    CHECK(std::abs(F - 1.0) < 1e-8);
}

TEST_CASE("density closed forms") {
    CHECK(std::fabs(SubordinationSolver(Measure::semicircle(1.0), 3.0).density(0.0) - 1 / (2 * pi)) < 1e-9);
    CHECK(std::fabs(SubordinationSolver(two_atom(), 2.0).density(0.0) - 1 / (2 * pi)) < 1e-9);
    CHECK(SubordinationSolver(two_atom(), 0.5).density(0.0) == 0.0);
    DensityProfile p = SubordinationSolver(quartic(), 0.5).density({-1, 0, 1});
    CHECK(p.psi.size() == 3);
    CHECK(std::fabs(p.x_star_tau) < 1e-12);
    CHECK(p.psi[1] <= 1e-8);
}

TEST_CASE("rightmost edge stays flat") {
    CHECK(SubordinationSolver(edge(), 1.0).rightmost_flat_check(1.0));
    CHECK(SubordinationSolver(edge(), 2.5).rightmost_flat_check(1.0));
    CHECK_FALSE(SubordinationSolver(quartic(), 0.5).rightmost_flat_check(0.0));
}

TEST_CASE("invalid tau") { CHECK_THROWS_AS(SubordinationSolver(quartic(), 0.0), Error); }

} // TEST_SUITE

TEST_SUITE("properties.freeconv") {

TEST_CASE("semicircle semigroup") {
    for (double t1 : {0.5, 2.0})
        for (double t2 : {0.25, 1.0, 3.0}) {
            SubordinationSolver s(Measure::semicircle(t1), t2);
            double R = 2 * std::sqrt(t1 + t2), worst = 0;
            for (int i = 0; i <= 60; ++i) {
                double x = -R + 0.02 + (2 * R - 0.04) * i / 60;
                worst = std::max(worst, std::fabs(s.density(x) - semicircle_density(t1 + t2, x)));
            }
            CHECK(worst < 1e-6);
        }
}

TEST_CASE("mass conservation on covering grids") {
    for (double tau : {0.1, 0.5, 1.0}) {
        SubordinationSolver s(quartic(), tau);
        double R = 2 + 2 * std::sqrt(tau) + 0.2;
        const int N = 2000;
        double h = 2 * R / N, m = 0;
        for (int i = 0; i <= N; ++i) m += (i == 0 || i == N ? 0.5 : 1.0) * s.density(-R + i * h);
        CHECK(std::fabs(m * h - 1) < 1e-4);
    }
}

TEST_CASE("subordination identity F + tau G(F) = x") {
    for (double tau : {0.2, 1.0}) {
        Measure m = quartic();
        SubordinationSolver s(m, tau);
        for (double x : {-2.5, -1.0, -0.01, 0.3, 1.7}) {
            cplx F = s.subordinate(x);
            if (F.imag() > 0) {
                cplx lhs = F + tau * cauchy_transform(m, F);
                CHECK(std::abs(lhs - x) < 1e-8);
            }
            CHECK(F.imag() >= 0);
        }
    }
}

TEST_CASE("boundary map is strictly increasing") {
    for (auto [m, tau] : {std::pair{quartic(), 0.5}, std::pair{quartic(), 1.0}, std::pair{edge(), 2.5},
                          std::pair{two_atom(), 0.5}}) {
        SubordinationSolver s(m, tau);
        double prev = -INFINITY;
        for (int i = 0; i <= 200; ++i) {
            double u = -3 + 6.0 * i / 200;
            double rho = s.boundary(u).rho;
            CHECK(rho > prev);
            prev = rho;
        }
    }
}

TEST_CASE("density vanishes at x*_tau") {
    for (auto [m, x, tau] : {std::tuple{quartic(), 0.0, 0.5}, std::tuple{quartic(), 0.0, 1.0},
                             std::tuple{k2_symmetric(), 0.0, 2.0}, std::tuple{edge(), 1.0, 1.0},
                             std::tuple{k2_asymmetric(0.3), 0.0, 1.0}}) {
        SubordinationSolver s(m, tau);
        CHECK(s.density(x_star_tau(m, x, tau)) <= 1e-8);
    }
}

TEST_CASE("density is non-negative on random grids") {
    SubordinationSolver s(k2_asymmetric(-0.3), 1.5);
    for (int i = 0; i < 200; ++i) CHECK(s.density(-4 + 8 * (i + 0.37) / 200) >= -1e-10);
}

} // TEST_SUITE
