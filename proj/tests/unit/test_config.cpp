#include <doctest.h>

#include <string>

#include "config.hpp"
#include "error.hpp"
#include "freeconv.hpp"

using namespace freesing;

namespace {

Code code_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const Error& e) {
        return e.code();
    }
    return Code::Internal;
}

} // namespace

TEST_SUITE("config") {

TEST_CASE("shipped configurations load") {
    const std::string dir = FREESING_CONFIG_DIR;
    RunConfig q = load_config(dir + "/quartic.toml");
    REQUIRE(q.measure);
    REQUIRE(q.singular);
    REQUIRE(q.potential);
    CHECK(q.seed == 20240611u);
    CHECK(q.tau == std::vector<double>{0.5, 1.0});
    CHECK(q.n == std::vector<int>{8});
    CHECK(q.grid->count == 121);
    CHECK(q.window->first == 1e-3);
    CHECK(std::fabs(tau_crit(*q.measure, 0) - 1) < 1e-10);
    CHECK(q.measure->singular_at(0) != nullptr);

    RunConfig e = load_config(dir + "/edge.toml");
    CHECK(e.singular->kind == SingularKind::RightEdge);
    CHECK(std::fabs(e.measure->mass() - 0.5) < 1e-10);
    RunConfig a = load_config(dir + "/two_atom.toml");
    CHECK(a.measure->atom_list().size() == 2);
    CHECK(a.mc.bins == 81);
    RunConfig k = load_config(dir + "/k2_symmetric.toml");
    CHECK(k.singular->k == 2);
}

TEST_CASE("grid and window strings") {
    GridSpec g = parse_grid("-1:1:5");
    CHECK(g.points() == std::vector<double>{-1, -0.5, 0, 0.5, 1});
    CHECK(parse_grid("0:pi:3").hi == doctest::Approx(3.14159265358979));
    CHECK(parse_window("1e-3:1e-2") == std::pair{1e-3, 1e-2});
    for (const char* bad : {"1:2", "1:0:4", "a:b:c", "0:1:0"}) CHECK_THROWS_AS(parse_grid(bad), Error);
    for (const char* bad : {"1", "0:1", "2:1", "1:2:3"}) CHECK_THROWS_AS(parse_window(bad), Error);
}

TEST_CASE("expression family with a declared point") {
    RunConfig rc = parse_config(R"toml(
[measure]
family = "expression"
[[measure.segments]]
a = -2
b = 2
density = "s^2*sqrt(4-s^2)/(2*pi)"
alpha_a = 0.5
alpha_b = 0.5

[singular]
x_star = 0
kind = "interior"
k = 1
c0 = "pi^(-1/3)"
h = "sqrt(1-s^2/4)"
)toml");
    CHECK(std::fabs(tau_crit(*rc.measure, 0) - 1) < 1e-9);
    CHECK(rc.mc.replicas == 100);
    CHECK_FALSE(rc.seed);
}

TEST_CASE("errors are configuration errors") {
    CHECK(code_of("bogus = 1") == Code::Config);
    CHECK(code_of("seed = -3") == Code::Config);
    CHECK(code_of("[measure]\nfamily = 'nope'") == Code::Config);
    CHECK(code_of("[measure]\nfamily = 'semicircle'\ntau = -1") == Code::Config);
    CHECK(code_of("[measure]\nfamily = 'atoms'\nlocations = [0]\nmasses = [0.4, 0.6]") == Code::Config);
    CHECK(code_of("[singular]\nx_star = 0") == Code::Config);
    CHECK(code_of("[measure]\nfamily = 'semicircle'\ntau = 1\n[singular]\nx_star = 0") == Code::Config);
    CHECK(code_of("[potential]\ncoefficients = [0, 0, 0, 1]") == Code::Config);
    CHECK(code_of("[run]\ntau = [0.5, 0]") == Code::Config);
    CHECK(code_of("[run]\nn = [2.5]") == Code::Config);
    CHECK(code_of("[mc]\ninitial = 'other'") == Code::Config);
    CHECK(code_of("[run]\ngrid = '1:0:3'") == Code::Config);
    CHECK(code_of("[measure") == Code::Config);
    try {
        load_config("/nonexistent/config.toml");
        FAIL("expected a config error");
    } catch (const Error& e) {
        CHECK(e.code() == Code::Config);
    }
}

} // TEST_SUITE
