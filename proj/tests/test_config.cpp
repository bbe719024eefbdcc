#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spde/config.hpp"

using namespace spde;

namespace {

const char* kGood = R"cfg(
name = demo
[operator]
family = constant
param = 1.0
mu = 1.0
[noise]
gamma = 2.0
N = 8
regime = linf
[nonlinearity]
f = tanh
g = linear
g_scale = 0.5
[initial]
u0 = cospi
[grids]
n_cells = 32
m_steps = 64
T = 0.5
[run]
M = 40
seed = 3
[checks]
ids = contraction, holder
)cfg";

} // namespace

TEST_CASE("parse_scenario: happy path") {
    auto sc = parse_scenario(kGood);
    CHECK(sc.name == "demo");
    CHECK(sc.op_family == "constant");
    CHECK(sc.gamma == 2.0);
    CHECK(sc.N == 8);
    CHECK(sc.f_id == "tanh");
    CHECK(sc.g_scale == 0.5);
    CHECK(sc.u0_id == "cospi");
    CHECK(sc.n_cells == 32);
    CHECK(sc.M == 40);
    REQUIRE(sc.check_ids.size() == 2);
    CHECK(sc.check_ids[1] == "holder");
    auto run = sc.build();
    CHECK(run.id == "demo");
    CHECK(run.ps.noise.n_modes() == 8);
    CHECK(run.ps.fam.w >= 1.0);
}

TEST_CASE("parse_scenario: comments and whitespace") {
    auto sc = parse_scenario("# header\nname = x  # trailing\n\n[grids]\n  T = 2.0\n");
    CHECK(sc.name == "x");
    CHECK(sc.T == 2.0);
}

TEST_CASE("parse_scenario: strict key and section errors with line numbers") {
    CHECK_THROWS_WITH_AS(parse_scenario("[bogus]\n"), doctest::Contains("line 1"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(parse_scenario("\n[grids]\nbogus = 1\n"), doctest::Contains("line 3"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(parse_scenario("[grids]\nno equals here\n"),
                         doctest::Contains("key = value"), std::runtime_error);
    CHECK_THROWS_WITH_AS(parse_scenario("[grids\n"), doctest::Contains("section"),
                         std::runtime_error);
}

TEST_CASE("build: hypothesis validation cites the tags") {
    auto sc = parse_scenario(kGood);
    sc.mu = 0.4;
    CHECK_THROWS_WITH_AS(sc.build(), doctest::Contains("(AT2)"), std::domain_error);
    sc.mu = 1.0;
    sc.theta_F = 0.8;
    sc.a = 0.3;
    CHECK_THROWS_WITH_AS(sc.build(), doctest::Contains("(H2)"), std::domain_error);
    sc.theta_F = 0.0;
    sc.theta_B = 0.3;
    CHECK_THROWS_WITH_AS(sc.build(), doctest::Contains("(H3)"), std::domain_error);
    sc.theta_B = 0.0;
    sc.gamma = 0.9;
    CHECK_THROWS_WITH_AS(sc.build(), doctest::Contains("cond"), std::domain_error);
    sc.gamma = 2.0;
    sc.regime = "lq";
    sc.beta = 0.4;
    sc.q = 2.0;  // needs q > 1/(1-0.8) = 5
    CHECK_THROWS_WITH_AS(sc.build(), doctest::Contains("(condCovb)"), std::domain_error);
    sc.q = 6.0;
    CHECK_NOTHROW(sc.build());
}

TEST_CASE("build: explicit shift and operator family ids") {
    auto sc = parse_scenario(kGood);
    sc.w = "7.5";
    CHECK(sc.build().ps.fam.w == 7.5);
    sc.op_family = "linear_t";
    CHECK_NOTHROW(sc.build());
    sc.op_family = "perturbed_cosine";
    CHECK_NOTHROW(sc.build());
    sc.op_family = "nope";
    CHECK_THROWS_AS(sc.build(), std::domain_error);
}

TEST_CASE("build: non-Lipschitz f disables the global flag") {
    auto sc = parse_scenario(kGood);
    sc.f_id = "square";
    auto run = sc.build();
    CHECK_FALSE(run.ps.lipschitz_global);
    sc.f_id = "cube";
    CHECK_FALSE(sc.build().ps.lipschitz_global);
    sc.f_id = "mystery";
    CHECK_THROWS_AS(sc.build(), std::domain_error);
}

TEST_CASE("load_scenario: missing file") {
    CHECK_THROWS_AS(load_scenario("/nonexistent/path.cfg"), std::runtime_error);
}
