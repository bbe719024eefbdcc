#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spde/mesh.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

using namespace spde;

namespace {
const double inf = std::numeric_limits<double>::infinity();
}

TEST_CASE("grids: construction invariants") {
    auto g = SpaceGrid::make(8);
    CHECK(g.h * g.n_cells == doctest::Approx(1.0).epsilon(1e-15));
    for (int i = 0; i < g.n_cells; ++i) CHECK(g.nodes[i] < g.nodes[i + 1]);
    CHECK_THROWS_AS(SpaceGrid::make(3), std::domain_error);

    auto tg = TimeGrid::make(2.0, 10);
    CHECK(tg.times.front() == 0.0);
    CHECK(tg.times.back() == 2.0);
    CHECK(tg.dt == doctest::Approx(0.2));
    CHECK_THROWS_AS(TimeGrid::make(0.0, 10), std::domain_error);
}

TEST_CASE("lp_norm: zero, constant, linear") {
    auto g = SpaceGrid::make(1000);
    CHECK(lp_norm(Field::zero(g), 2.0) == 0.0);
    CHECK(lp_norm(Field::constant(g, 1.0), 2.0) == doctest::Approx(1.0).epsilon(1e-12));
    auto lin = Field::of(g, [](double s) { return s; });
    CHECK(lp_norm(lin, 2.0) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-4));
    CHECK(lp_norm(lin, inf) == doctest::Approx(1.0));
    CHECK_THROWS_AS(lp_norm(lin, 0.5), std::domain_error);
}

TEST_CASE("lp_norm: homogeneity, triangle, monotone in p") {
    auto g = SpaceGrid::make(64);
    std::mt19937_64 rng(42);
    std::normal_distribution<double> nd;
    for (int rep = 0; rep < 20; ++rep) {
        auto f = Field::of(g, [&](double) { return nd(rng); });
        auto h = Field::of(g, [&](double) { return nd(rng); });
        const double c = nd(rng);
        Field cf = f;
        cf.values *= c;
        CHECK(lp_norm(cf, 2.0) ==
              doctest::Approx(std::abs(c) * lp_norm(f, 2.0)).epsilon(1e-12));
        CHECK(lp_norm(f + h, 3.0) <= lp_norm(f, 3.0) + lp_norm(h, 3.0) + 1e-12);
        // total quadrature mass is 1, so the p-norm is nondecreasing in p
        double prev = lp_norm(f, 1.0);
        for (double p : {2.0, 4.0, 8.0, inf}) {
            const double cur = lp_norm(f, p);
            CHECK(cur >= prev - 1e-12);
            prev = cur;
        }
    }
}

TEST_CASE("sobolev1_norm: analytic values") {
    auto g = SpaceGrid::make(1000);
    CHECK(sobolev1_norm(Field::constant(g, -2.5)) == doctest::Approx(2.5).epsilon(1e-12));
    auto lin = Field::of(g, [](double s) { return s; });
    CHECK(sobolev1_norm(lin) == doctest::Approx(std::sqrt(1.0 / 3.0 + 1.0)).epsilon(1e-3));
    auto cosf = Field::of(g, [](double s) { return std::cos(M_PI * s); });
    CHECK(sobolev1_norm(cosf) ==
          doctest::Approx(std::sqrt(0.5 + M_PI * M_PI / 2.0)).epsilon(1e-2));
}

TEST_CASE("holder_seminorm_time: analytic paths") {
    auto g = SpaceGrid::make(8);
    auto tg = TimeGrid::make(1.0, 64);

    Path constant = Path::zero(g, tg);
    for (auto& f : constant.fields) f = Field::constant(g, 3.0);
    CHECK(holder_seminorm_time(constant, 0.3, SpatialNorm::Sup) == 0.0);

    Path linear = Path::zero(g, tg);
    for (int k = 0; k <= tg.m_steps; ++k) linear.fields[k] = Field::constant(g, tg.times[k]);
    CHECK(holder_seminorm_time(linear, 0.5, SpatialNorm::Sup) == doctest::Approx(1.0).epsilon(1e-12));

    Path root = Path::zero(g, tg);
    for (int k = 0; k <= tg.m_steps; ++k)
        root.fields[k] = Field::constant(g, std::sqrt(tg.times[k]));
    CHECK(holder_seminorm_time(root, 0.5, SpatialNorm::Sup) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("holder_seminorm_time: nondecreasing in lambda when all gaps are below 1") {
    auto g = SpaceGrid::make(8);
    auto tg = TimeGrid::make(1.0, 32);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ud(-0.4, 0.4);
    Path p = Path::zero(g, tg);
    double v = 0.0;
    for (int k = 0; k <= tg.m_steps; ++k) {
        v += ud(rng) / tg.m_steps;  // increments well below 1 in sup norm
        p.fields[k] = Field::constant(g, v);
    }
    // time gaps are <= 1, so (t_l - t_k)^lambda shrinks as lambda grows
    double prev = holder_seminorm_time(p, 0.1, SpatialNorm::Sup);
    for (double lam : {0.3, 0.5, 0.7, 0.9}) {
        const double cur = holder_seminorm_time(p, lam, SpatialNorm::Sup);
        CHECK(cur >= prev - 1e-12);
        prev = cur;
    }
}

TEST_CASE("csv round trip") {
    auto g = SpaceGrid::make(4);
    auto tg = TimeGrid::make(0.5, 3);
    Path p = Path::zero(g, tg);
    for (int k = 0; k <= 3; ++k) p.fields[k] = Field::constant(g, k * 1.25);
    std::stringstream ss;
    write_csv(ss, p);
    Path q = read_csv(ss, g);
    for (int k = 0; k <= 3; ++k)
        CHECK((p.fields[k].values - q.fields[k].values).norm() == 0.0);
}
