#include <doctest.h>

#include <tuple>

#include "common.hpp"
#include "error.hpp"
#include "finite_n.hpp"
#include "quadrature.hpp"

using namespace freesing;
using namespace fixtures;

namespace {

const std::vector<double> kBreaks{-1.5, -1, 0, 1, 1.5};

LocalScaling quartic_scaling() { return local_scaling(*quartic().singular_at(0), quartic_potential()); }

} // namespace

TEST_SUITE("finite_n") {

TEST_CASE("gaussian weight matches Hermite data") {
    Potential g({0, 0, 0.5});
    OrthoBasis b1(g, 1, 4);
    CHECK(std::fabs(b1.p0() - std::pow(1 / (2 * pi), 0.25)) < 1e-13);
    KernelEngine e1(b1);
    KernelValue k = e1.kernel_X(0, 0, 1);
    CHECK(std::fabs(k.value - 1 / std::sqrt(4 * pi)) < 1e-13);
    CHECK(std::fabs(k.imag) < 1e-13);

    OrthoBasis b5(g, 5, 8);
    for (int j = 1; j <= 8; ++j) {
        CHECK(std::fabs(b5.b()[j] * b5.b()[j] - j / 5.0) < 1e-12);
        CHECK(std::fabs(b5.a()[j - 1]) < 1e-12);
    }
}

TEST_CASE("Christoffel-Darboux kernel of the quartic") {
    for (int n : {2, 4, 6, 8}) {
        OrthoBasis b(quartic_potential(), n, n);
        KernelEngine e(b);
        CHECK(b.orthonormality_residual(n) < 1e-12);
        double tr = integrate_scalar([&](double x) { return e.kernel_M(x, x); }, b.lo(), b.hi(), kBreaks);
        CHECK(std::fabs(tr - n) < 1e-10);
        for (double x : {-1.2, 0.0, 0.7})
            for (double z : {-0.3, 1.1}) {
                double v = integrate_scalar([&](double y) { return e.kernel_M(x, y) * e.kernel_M(y, z); },
                                            b.lo(), b.hi(), kBreaks);
                CHECK(std::fabs(v - e.kernel_M(x, z)) < 1e-10);
            }
    }
}

TEST_CASE("single-time kernel: contour independence and the equal-time reduction") {
    const int n = 8;
    OrthoBasis b(quartic_potential(), n, n);
    LocalScaling sc = quartic_scaling();
    KernelEngine exact(b, sc);
    std::vector<KernelEngine> shifted;
    for (double shift : {-0.2, 0.0, 0.2}) {
        KernelOptions o;
        o.exact_contour = false;
        o.through_x_star = true;
        o.contour_shift = shift;
        shifted.emplace_back(b, sc, o);
    }
    const double tau = 0.5, t = tau / (1 + tau);
    for (double x : {-0.8, -0.1, 0.0, 0.3, 1.0})
        for (double y : {-0.5, 0.2}) {
            double k0 = exact.kernel_X(x, y, tau).value;
            for (const KernelEngine& e : shifted) CHECK(std::fabs(e.kernel_X(x, y, tau).value - k0) < 1e-9);
            double km = exact.kernel_multitime(x / (1 + tau), y / (1 + tau), t, t).value;
            CHECK(std::fabs(km / (1 + tau) - k0) < 1e-12);
        }
    for (double x = -2; x <= 2; x += 0.25) CHECK(exact.kernel_X(x, x, tau).value > 0);
}

TEST_CASE("overlap matrix is the identity") {
    for (int n : {1, 2, 3, 4}) {
        OrthoBasis b(quartic_potential(), n, n);
        KernelEngine e(b);
        for (double t : {0.1, 0.3, 0.7}) {
            Eigen::MatrixXd m = e.overlap_matrix(t);
            CHECK((m - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("log_G against the uncompleted Gaussian") {
    const int n = 5;
    for (auto [x, y, t, tp] : {std::tuple{0.3, -0.2, 0.2, 0.5}, std::tuple{-1.0, 1.5, 0.05, 0.9}}) {
        double e = -n * (x - y) * (x - y) / (2 * (tp - t)) + n * x * x / (2 * (1 - t)) - n * y * y / (2 * (1 - tp));
        double ref = 0.5 * std::log(n / (2 * pi * (tp - t))) + e;
        CHECK(std::fabs(KernelEngine::log_G(n, x, y, t, tp) - ref) < 1e-12 * std::max(1.0, std::fabs(ref)));
    }
    CHECK_THROWS_AS(KernelEngine::log_G(n, 0.1, 0.2, 0.5, 0.2), Error);
}

TEST_CASE("gauge") {
    ScalingModel m(quartic_potential(), 10, quartic_scaling());
    CHECK(std::fabs(m.t_crit() - 0.5) < 1e-12);
    GaugeData g0 = m.gauge(0.0, 0.2);
    CHECK(g0.s_n == 0);
    CHECK(g0.R_hat == 0);
    for (double u : {0.5, -1.0, 2.0}) {
        GaugeData g = m.gauge(u, 0.2);
        CHECK(std::fabs(g.residual) < 1e-12);
        CHECK(g.s_n * u > 0);
    }
    try {
        m.gauge(0.1, 0.6);
        FAIL("expected OutOfRange");
    } catch (const Error& e) {
        CHECK(e.code() == Code::OutOfRange);
    }
}

TEST_CASE("errors") {
    CHECK_THROWS_AS(OrthoBasis(quartic_potential(), 0, 3), Error);
    CHECK_THROWS_AS(OrthoBasis(quartic_potential(), 4, 25), Error);
    OrthoBasis b(quartic_potential(), 6, 6);
    KernelEngine plain(b);
    CHECK_THROWS_AS(plain.rescaled_kernel(0, 0, 0.2, 0.3), Error);
    KernelOptions o;
    o.exact_contour = false;
    o.z_max = 0.05;
    KernelEngine tight(b, quartic_scaling(), o);
    try {
        tight.kernel_X(0.1, 0.2, 0.5);
        FAIL("expected TruncationTooTight");
    } catch (const Error& e) {
        CHECK(e.code() == Code::TruncationTooTight);
    }
    KernelOptions w;
    w.w_max = 0.3;
    KernelEngine narrow(b, quartic_scaling(), w);
    try {
        narrow.kernel_X(0.1, 0.2, 0.5);
        FAIL("expected TruncationTooTight");
    } catch (const Error& e) {
        CHECK(e.code() == Code::TruncationTooTight);
    }
}

} // TEST_SUITE

TEST_SUITE("properties.finite_n") {

TEST_CASE("correlation determinants are gauge invariant") {
    OrthoBasis b(quartic_potential(), 8, 8);
    KernelEngine e(b, quartic_scaling());
    const double t = 0.2;
    const std::vector<double> u{-0.9, -0.2, 0.4, 1.3};
    const int m = int(u.size());
    Eigen::MatrixXd k(m, m), g(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            k(i, j) = e.rescaled_kernel(u[i], u[j], t, t);
            g(i, j) = std::exp(-e.gauge(u[i], t).H_hat + e.gauge(u[j], t).H_hat) * k(i, j);
        }
    double dk = k.determinant(), dg = g.determinant();
    CHECK(std::fabs(dk - dg) <= 1e-12 * std::max(1.0, std::fabs(dk)));
    for (int i = 0; i < m; ++i) CHECK(k(i, i) > 0);
}

TEST_CASE("rescaled kernel converges as n grows") {
    LocalScaling sc = quartic_scaling();
    std::vector<std::pair<double, double>> pts{{0, 0}, {0.5, 0.5}, {-0.5, 0.3}, {1, -1}, {0.2, 0.8}};
    std::vector<std::vector<double>> rows;
    for (int n : {4, 6, 8, 10, 12}) {
        OrthoBasis b(quartic_potential(), n, n);
        KernelEngine e(b, sc);
        std::vector<double> r;
        for (auto [u, v] : pts) r.push_back(e.rescaled_kernel(u, v, 0.2, 0.2));
        rows.push_back(r);
    }
    for (size_t i = 0; i < pts.size(); ++i)
        for (size_t j = 2; j < rows.size(); ++j)
            CHECK(std::fabs(rows[j][i] - rows[j - 1][i]) < std::fabs(rows[j - 1][i] - rows[j - 2][i]));
}

TEST_CASE("scaled G_n tends to the delta on the diagonal") {
    LocalScaling sc = quartic_scaling();
    auto bump = [](double u, double v) {
        double r2 = u * u + v * v;
        return r2 < 1 ? std::exp(-1 / (1 - r2)) : 0.0;
    };
    double diag = integrate_scalar([&](double u) { return bump(u, u); }, -1 / std::sqrt(2.0), 1 / std::sqrt(2.0));
    double prev = INFINITY;
    for (int n : {1000, 100000, 10000000}) {
        ScalingModel m(quartic_potential(), n, sc);
        double width = std::pow(n, -(0.5 - sc.gamma));
        double I = integrate_scalar(
            [&](double u) {
                return integrate_scalar([&](double v) { return std::exp(m.log_F(u, v, 0.2, 0.3)) * bump(u, v); },
                                        -1, 1, graded_breaks(u, width, -1, 1));
            },
            -1, 1, {});
        double err = std::fabs(I / diag - 1);
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev < 1e-3);
}

} // TEST_SUITE
