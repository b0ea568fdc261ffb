#include <doctest.h>

#include <cstdio>
#include <random>

#include "common.hpp"
#include "error.hpp"
#include "expr.hpp"
#include "quadrature.hpp"

using namespace freesing;
using namespace fixtures;

TEST_SUITE("measure") {

TEST_CASE("expression parser") {
    CHECK(Expr::parse("2^3^2")(0) == doctest::Approx(512));
    CHECK(Expr::parse("-s^2")(3) == doctest::Approx(-9));
    CHECK(Expr::parse("sqrt(4-x^2)/(2*pi)")(0) == doctest::Approx(1 / pi));
    CHECK(Expr::parse("exp(log(s)) + abs(-1)")(2.5) == doctest::Approx(3.5));
    CHECK(eval_constant("1/(2*pi)") == doctest::Approx(1 / (2 * pi)));
    CHECK_THROWS_AS(Expr::parse("sqrt(2"), Error);
    CHECK_THROWS_AS(Expr::parse("foo(1)"), Error);
    CHECK_THROWS_AS(eval_constant("s + 1"), Error);
}

TEST_CASE("quadrature with square-root endpoints") {
    double v = integrate_scalar([](double s) { return std::sqrt(4 - s * s); }, -2, 2, {}, true, true);
    CHECK(std::fabs(v - 2 * pi) < 1e-12);
    v = integrate_scalar([](double s) { return std::pow(1 - s, 2.5) * std::sqrt(1 + s); }, -1, 1, {}, true, true);
    // Beta function: 2^4 B(7/2, 3/2) = 16 * Gamma(3.5) Gamma(1.5) / Gamma(5)
    double beta = 16 * std::tgamma(3.5) * std::tgamma(1.5) / std::tgamma(5.0);
    CHECK(std::fabs(v - beta) < 1e-12 * beta);
    QuadOptions tight;
    tight.max_panels = 4;
    CHECK_THROWS_AS(integrate_scalar([](double s) { return 1 / (1e-9 + s * s); }, -1, 1, {}, false, false, tight),
                    Error);
}

TEST_CASE("integrate: masses and moments") {
    Measure sc = Measure::semicircle(1.0);
    CHECK(std::fabs(integrate(sc, [](double) { return 1.0; }) - 1) < 1e-10);
    CHECK(std::fabs(integrate(sc, [](double s) { return s * s; }) - 1) < 1e-10);
    CHECK(std::fabs(integrate(quartic(), [](double) { return 1.0; }) - 1) < 1e-10);
    CHECK(std::fabs(integrate(two_atom(), [](double s) { return s * s; }) - 1) < 1e-14);
    CHECK(std::fabs(integrate(sc, Expr::parse("s^4")) - 2) < 1e-10);  // Catalan number C_2
}

TEST_CASE("measure validation") {
    CHECK_THROWS_AS(Measure::poly_times_sqrt({0, 0, 1.0}, 2.0), Error);   // mass != 1
    CHECK_THROWS_AS(Measure::poly_times_sqrt({0, 0, -1 / (2 * pi)}, 2.0), Error);  // negative
    Segment a{0, 1, Expr::parse("1"), 0, 0}, b{0.5, 1.5, Expr::parse("0"), 0, 0};
    CHECK_THROWS_AS(Measure({a, b}, {}, {"expression", {}}), Error);
    CHECK_NOTHROW(Measure::poly_times_sqrt({0, 0, 1.0}, 2.0, 2 * pi));  // declared mass
}

TEST_CASE("cauchy transform closed forms") {
    cplx g = cauchy_transform(Measure::semicircle(1.0), {0, 2});
    CHECK(std::fabs(g.real()) < 1e-12);
    CHECK(std::fabs(g.imag() - (1 - std::sqrt(2.0))) < 1e-10);
    g = cauchy_transform(two_atom(), {2, 0});
    CHECK(std::fabs(g.real() - 2.0 / 3) < 1e-14);
    g = cauchy_transform(quartic(), {1e6, 0});
    CHECK(std::fabs(g.real() * 1e6 - 1) < 1e-9);
    try {
        cauchy_transform(quartic(), {0.5, 0});
        FAIL("expected OnSupport");
    } catch (const Error& e) {
        CHECK(e.code() == Code::OnSupport);
    }
}

TEST_CASE("moment_g") {
    CHECK(std::fabs(moment_g(quartic(), 0, 1) - 1) < 1e-9);
    CHECK(std::fabs(moment_g(quartic(), 0, 0)) < 1e-12);
    CHECK(std::fabs(moment_g(two_atom(), 0, 1) - 1) < 1e-14);
    Measure e = edge();
    CHECK(std::fabs(moment_g(e, 1, 0) + 0.4) < 1e-9 * 0.4);
    CHECK(std::fabs(moment_g(e, 1, 1) - 0.4) < 1e-9 * 0.4);
    CHECK(std::fabs(moment_g(e, 1, 2) + 0.8) < 1e-9 * 0.8);
    try {
        moment_g(quartic(), 0, 2);
        FAIL("expected Divergent");
    } catch (const Error& err) {
        CHECK(err.code() == Code::Divergent);
    }
    try {
        moment_g(e, 1, 3);
        FAIL("expected Divergent");
    } catch (const Error& err) {
        CHECK(err.code() == Code::Divergent);
    }
}

TEST_CASE("singular factorization") {
    SingularPoint sp = quartic(false).derive_singular(0.0);
    CHECK(sp.kind == SingularKind::Interior);
    CHECK(sp.k == 1);
    CHECK(std::fabs(std::pow(sp.c0, 3) - 1 / pi) < 1e-14);
    CHECK(std::fabs(sp.h(0) - 1) < 1e-14);
    CHECK(std::fabs(sp.h(1.2) - std::sqrt(4 - 1.44) / 2) < 1e-14);
    SingularPoint bad = sp;
    bad.c0 *= 1.01;
    CHECK_THROWS_AS(quartic(false).with_singular_point(bad), Error);
    SingularPoint se = edge(false).derive_singular(1.0);
    CHECK(se.kind == SingularKind::RightEdge);
    CHECK(se.kappa() == 2.5);
    CHECK(std::fabs(se.gamma() - 1 / 3.5) < 1e-15);
}

TEST_CASE("principal value of h") {
    Measure q = quartic();
    CHECK(std::fabs(principal_value_h(q, *q.singular_at(0))) < 1e-12);
    // Off-centre point: density C (s - 0.3)^2 sqrt(4 - s^2); the Hilbert transform
    // PV int sqrt(4 - s^2) / (x - s) ds = pi x gives the oracle.
    const double x = 0.3;
    double mass = integrate_scalar([&](double s) { return (s - x) * (s - x) * std::sqrt(4 - s * s); }, -2, 2,
                                   {}, true, true);
    const double K = std::sqrt(4 - x * x);
    char text[96];
    std::snprintf(text, sizeof text, "(s-0.3)^2*sqrt(4-s^2)/%.17g", mass);
    Segment sg{-2, 2, Expr::parse(text), 0.5, 0.5};
    Measure m({sg}, {}, {"expression", {}});
    SingularPoint sp;
    sp.x_star = x;
    sp.k = 1;
    sp.c0 = std::cbrt(K / mass);
    sp.h = Expr::parse("sqrt(4-s^2)/sqrt(4-0.09)");
    m = m.with_singular_point(sp);
    CHECK(std::fabs(principal_value_h(m, *m.singular_at(x)) - pi * x / K) < 1e-8);
    try {
        Measure e = edge();
        principal_value_h(e, *e.singular_at(1.0));
        FAIL("expected WrongKind");
    } catch (const Error& err) {
        CHECK(err.code() == Code::WrongKind);
    }
}

TEST_CASE("equilibrium check") {
    std::vector<double> grid{-1.5, -1, -0.3, 0.2, 0.7, 1.9};
    CHECK(check_equilibrium(Measure::semicircle(1.0), Potential({0, 0, 0.5}), grid) < 1e-8);
    CHECK(check_equilibrium(quartic(), quartic_potential(), grid) < 1e-8);
    CHECK(check_equilibrium(Measure::semicircle(1.0), Potential({0, 0, 0, 0, 1}), grid) >= 0.1);
}

TEST_CASE("derivative identity") {
    Measure q = quartic();
    const SingularPoint& sp = *q.singular_at(0);
    CHECK(v_derivative_identity(q, sp, quartic_potential(), 1) < 1e-8);
    CHECK(v_derivative_identity(q, sp, quartic_potential(), 2) < 1e-8);
    try {
        v_derivative_identity(q, sp, quartic_potential(), 3);
        FAIL("expected OutOfRange");
    } catch (const Error& e) {
        CHECK(e.code() == Code::OutOfRange);
    }
}

} // TEST_SUITE

TEST_SUITE("properties.measure") {

TEST_CASE("unit mass for every constructed measure") {
    for (const Measure& m : {quartic(), k2_symmetric(), k2_asymmetric(0.3), Measure::semicircle(2.0), two_atom()})
        CHECK(std::fabs(integrate(m, [](double) { return 1.0; }) - 1) < 1e-10);
    CHECK(std::fabs(integrate(edge(), [](double) { return 1.0; }) - 0.5) < 1e-10);
}

TEST_CASE("Herglotz property and conjugate symmetry") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> re(-4, 4), lim(-6, 1);
    for (const Measure& m : {quartic(), edge(), two_atom(), k2_asymmetric(-0.3)}) {
        for (int i = 0; i < 50; ++i) {
            cplx z{re(rng), std::pow(10.0, lim(rng))};
            cplx g = cauchy_transform(m, z), gc = cauchy_transform(m, std::conj(z));
            CHECK(g.imag() < 0);
            CHECK(std::abs(gc - std::conj(g)) <= 1e-12 * std::abs(g));
        }
    }
}

TEST_CASE("g0 agrees with the boundary value of -Re G") {
    for (auto [m, x] : {std::pair{quartic(), 0.0}, std::pair{edge(), 1.0}, std::pair{k2_asymmetric(0.3), 0.0}}) {
        double g0 = moment_g(m, x, 0);
        double lim = -cauchy_transform(m, {x, 1e-10}).real();
        CHECK(std::fabs(g0 - lim) < 1e-7);
    }
}

TEST_CASE("-2/V'' equals 1/g1 for the quartic pair") {
    double v2 = quartic_potential().derivative(0, 2);
    CHECK(std::fabs(-2 / v2 - 1 / moment_g(quartic(), 0, 1)) < 1e-7);
}

TEST_CASE("declared mass rescales moments linearly") {
    // Same shape with mass 1/2 and 1: every moment scales by the mass ratio.
    Measure half = edge(false);
    Measure one = Measure::jacobi_power(8 / (5 * pi), 0.5, 2.5, -1, 1, 1.0);
    for (int j = 0; j < 2; ++j) {
        double a = integrate(half, [&](double s) { return std::pow(s, j); });
        double b = integrate(one, [&](double s) { return std::pow(s, j); });
        CHECK(std::fabs(2 * a - b) < 1e-12);
    }
    cplx z{0.3, 0.2};
    CHECK(std::abs(2.0 * cauchy_transform(half, z) - cauchy_transform(one, z)) < 1e-12);
}

} // TEST_SUITE
