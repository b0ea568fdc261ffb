// Exercises the shared library through the public header only.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <string>
#include <vector>

#include <freesing/freesing.h>

namespace {

constexpr double pi = std::numbers::pi;

fs_measure* quartic() {
    const double c[] = {0, 0, 1 / (2 * pi)};
    fs_measure* m = nullptr;
    REQUIRE(fs_measure_poly_times_sqrt(c, 3, 2.0, 1.0, &m) == FS_OK);
    REQUIRE(fs_measure_derive_singular(m, 0.0) == FS_OK);
    return m;
}

} // namespace

TEST_CASE("status names and last error") {
    CHECK(std::string(fs_status_name(FS_OK)) == "Ok");
    fs_measure* m = nullptr;
    CHECK(fs_measure_semicircle(-1, &m) == FS_INVALID_ARGUMENT);
    CHECK(m == nullptr);
    CHECK(std::strlen(fs_last_error()) > 0);
    CHECK(fs_measure_semicircle(1, nullptr) == FS_INVALID_ARGUMENT);
    CHECK(std::string(fs_case_name(FS_CASE_III)) == "III");
}

TEST_CASE("measure and free convolution") {
    fs_measure* m = quartic();
    double mass = 0, lo = 0, hi = 0;
    CHECK(fs_measure_mass(m, &mass) == FS_OK);
    CHECK(std::fabs(mass - 1) < 1e-12);
    CHECK(fs_measure_support(m, &lo, &hi) == FS_OK);
    CHECK(lo == -2);
    CHECK(hi == 2);
    double second = 0;
    CHECK(fs_measure_integrate(m, "s^2", &second) == FS_OK);
    CHECK(std::fabs(second - 2) < 1e-12);
    CHECK(fs_measure_integrate(m, "s^", &second) != FS_OK);

    CHECK(fs_measure_singular_count(m) == 1);
    fs_singular sp;
    CHECK(fs_measure_singular(m, 0, &sp) == FS_OK);
    CHECK(sp.kind == FS_INTERIOR);
    CHECK(sp.k == 1);
    CHECK(fs_measure_singular(m, 1, &sp) == FS_OUT_OF_RANGE);

    double tc = 0;
    CHECK(fs_tau_crit(m, 0, &tc) == FS_OK);
    CHECK(std::fabs(tc - 1) < 1e-10);
    const double x[] = {0.0, 0.5};
    double psi[2];
    CHECK(fs_density(m, 0.5, x, 2, psi) == FS_OK);
    CHECK(std::fabs(psi[0]) < 1e-8);
    CHECK(psi[1] > 0);

    fs_critical cd;
    CHECK(fs_classify(m, 0, 1.0, &cd) == FS_OK);
    CHECK(cd.label == FS_CASE_I);
    CHECK(std::isnan(cd.c_tau));
    CHECK(std::fabs(cd.theta - pi / 2) < 1e-12);

    fs_power_law pred, fit;
    CHECK(fs_predicted_local_law(m, 0, 0.5, FS_RIGHT, &pred) == FS_OK);
    CHECK(pred.exponent == 2);
    std::vector<double> d(32), p(32);
    CHECK(fs_local_samples(m, 0, 0.5, FS_RIGHT, 1e-3, 1e-2, 32, d.data(), p.data()) == FS_OK);
    CHECK(fs_fit_power_law(d.data(), p.data(), 32, 1e-3, 1e-2, &fit) == FS_OK);
    CHECK(std::fabs(fit.exponent - 2) < 0.05);
    CHECK(fs_classify(m, 0.7, 0.5, &cd) == FS_INVALID_ARGUMENT);

    fs_measure* c = fs_measure_clone(m);
    fs_measure_free(m);
    CHECK(fs_tau_crit(c, 0, &tc) == FS_OK);
    fs_measure_free(c);
}

TEST_CASE("declared factorization on an expression measure") {
    fs_segment s{-2, 2, "s^2*sqrt(4-s^2)/(2*pi)", 0.5, 0.5};
    fs_measure* m = nullptr;
    REQUIRE(fs_measure_expression(&s, 1, 1.0, &m) == FS_OK);
    CHECK(fs_measure_declare_singular(m, 0, FS_INTERIOR, 1, std::pow(pi, -1.0 / 3), "sqrt(1-s^2/4)") == FS_OK);
    double tc = 0;
    CHECK(fs_tau_crit(m, 0, &tc) == FS_OK);
    CHECK(std::fabs(tc - 1) < 1e-9);
    CHECK(fs_measure_declare_singular(m, 0.5, FS_INTERIOR, 1, 1.0, "1") != FS_OK);
    fs_measure_free(m);
}

TEST_CASE("kernels") {
    const double V[] = {0, 0, 0.5};
    fs_kernel* k = nullptr;
    REQUIRE(fs_kernel_create(V, 3, 1, 0, nullptr, 0, &k) == FS_OK);
    fs_kernel_value kv;
    CHECK(fs_kernel_X(k, 0, 0, 1, &kv) == FS_OK);
    CHECK(std::fabs(kv.value - 1 / std::sqrt(4 * pi)) < 1e-12);
    double r = 0;
    CHECK(fs_kernel_rescaled(k, 0, 0, 0.2, 0.2, &r) == FS_INVALID_ARGUMENT);
    fs_kernel_free(k);

    const double Q[] = {0, 0, -1, 0, 0.25};
    fs_measure* m = quartic();
    REQUIRE(fs_kernel_create(Q, 5, 4, 0, m, 0, &k) == FS_OK);
    double ov[16];
    CHECK(fs_kernel_overlap(k, 0.3, ov) == FS_OK);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(std::fabs(ov[4 * i + j] - (i == j)) < 1e-10);
    fs_gauge g;
    CHECK(fs_kernel_gauge(k, 0.5, 0.2, &g) == FS_OK);
    CHECK(std::fabs(g.residual) < 1e-10);
    CHECK(fs_kernel_rescaled(k, 0, 0, 0.2, 0.2, &r) == FS_OK);
    CHECK(r > 0);
    fs_kernel_free(k);
    fs_measure_free(m);
    CHECK(fs_kernel_create(Q, 5, 30, 0, nullptr, 0, &k) == FS_INVALID_ARGUMENT);
}

TEST_CASE("sampling is reproducible") {
    double a[8], b[8];
    CHECK(fs_sample_gue_eigs(8, 5, 1, a) == FS_OK);
    CHECK(fs_sample_gue_eigs(8, 5, 1, b) == FS_OK);
    CHECK(std::memcmp(a, b, sizeof a) == 0);
    const double V[] = {0, 0, 0.5};
    fs_ue_sampler* s = nullptr;
    REQUIRE(fs_ue_sampler_create(V, 3, 4, 1, 2, 0, 0, &s) == FS_OK);
    double x[4];
    CHECK(fs_ue_sampler_next(s, x) == FS_OK);
    CHECK(x[0] < x[1]);
    CHECK(fs_ue_sampler_acceptance(s) > 0);
    fs_ue_sampler_free(s);

    const double init[] = {-1, 1, -1, 1};
    const double times[] = {0.2, 0.6};
    double paths[8];
    int resampled = -1;
    CHECK(fs_sample_nibm(init, 2, 2, times, 2, 3, 0, paths, &resampled) == FS_OK);
    CHECK(resampled == 0);
    CHECK(paths[0] < paths[1]);
    double centers[4], heights[4];
    CHECK(fs_histogram(paths, 8, -3, 3, 4, centers, heights) == FS_OK);
    CHECK(fs_histogram(paths, 8, 1, 1, 4, centers, heights) == FS_EMPTY_RANGE);
    double D = 0, pv = 0;
    CHECK(fs_ks_two_sample(a, 8, a, 8, &D, &pv) == FS_OK);
    CHECK(D == 0);
}

TEST_CASE("configuration access") {
    fs_config* c = nullptr;
    REQUIRE(fs_config_parse("seed = 9\nout = 'res'\n[measure]\nfamily = 'semicircle'\ntau = 1\n[run]\ntau = [0.5, 1]\n", &c) == FS_OK);
    uint64_t seed = 0;
    int present = 0;
    CHECK(fs_config_seed(c, &seed, &present) == FS_OK);
    CHECK(present == 1);
    CHECK(seed == 9);
    double v[4];
    size_t n = 0;
    CHECK(fs_config_numbers(c, "tau", v, 4, &n) == FS_OK);
    CHECK(n == 2);
    CHECK(v[1] == 1);
    CHECK(fs_config_numbers(c, "grid", v, 4, &n) == FS_OK);
    CHECK(n == 0);
    CHECK(fs_config_numbers(c, "nonsense", v, 4, &n) == FS_INVALID_ARGUMENT);
    char buf[16];
    size_t len = 0;
    CHECK(fs_config_string(c, "out", buf, sizeof buf, &len) == FS_OK);
    CHECK(std::string(buf) == "res");
    REQUIRE(fs_config_measure(c) != nullptr);
    double mass = 0;
    CHECK(fs_measure_mass(fs_config_measure(c), &mass) == FS_OK);
    fs_config_free(c);
    CHECK(fs_config_parse("[measure", &c) == FS_CONFIG);
    CHECK(fs_config_load("/nonexistent.toml", &c) == FS_CONFIG);
}
