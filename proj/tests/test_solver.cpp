#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spde/solver.hpp"

#include <cmath>

using namespace spde;

namespace {

ProblemSpec drift_only(const SpaceGrid& g, double T) {
    ProblemSpec ps;
    ps.fam = OperatorFamily::zero();
    ps.noise = make_flat_mode(g, 1.0);
    ps.f = [](double, double, double u) { return -u; };
    ps.L_f = 1.0;
    ps.g = [](double, double, double) { return 0.0; };
    ps.L_g = 0.0;
    ps.u0 = Field::constant(g, 1.0);
    ps.T = T;
    return ps;
}

} // namespace

TEST_CASE("validate enforces the hypothesis tags") {
    auto g = SpaceGrid::make(8);
    auto ps = drift_only(g, 1.0);
    CHECK_NOTHROW(ps.validate());
    ps.theta_F = 0.7;
    ps.a = 0.4;
    CHECK_THROWS_WITH_AS(ps.validate(), doctest::Contains("(H2)"), std::domain_error);
    ps.theta_F = 0.0;
    ps.theta_B = 0.2;
    CHECK_THROWS_WITH_AS(ps.validate(), doctest::Contains("(H3)"), std::domain_error);
}

TEST_CASE("nemytskii builds the multiplication columns") {
    auto g = SpaceGrid::make(32);
    ProblemSpec ps;
    ps.fam = OperatorFamily::zero();
    ps.noise = make_model(2.0, 3, g);
    ps.f = [](double t, double s, double u) { return t + s + u; };
    ps.g = [](double, double, double u) { return 2.0 * u; };
    ps.u0 = Field::constant(g, 1.0);
    auto u = Field::of(g, [](double s) { return s; });
    auto v = nemytskii(ps, 0.5, u);
    for (int i = 0; i <= 32; ++i) {
        const double s = g.nodes[i];
        CHECK(v.Fu.values[i] == doctest::Approx(0.5 + 2.0 * s));
        for (int n = 0; n < 3; ++n)
            CHECK(v.Bu[n].values[i] ==
                  doctest::Approx(2.0 * s * std::sqrt(ps.noise.lambdas[n]) *
                                  ps.noise.modes[n].values[i]));
    }
}

TEST_CASE("sample_member streams are independent and reproducible") {
    auto g = SpaceGrid::make(8);
    auto m = make_model(2.0, 2, g);
    auto tg = TimeGrid::make(1.0, 16);
    auto a = sample_member(m, tg, 5, 0);
    auto b = sample_member(m, tg, 5, 1);
    auto a2 = sample_member(m, tg, 5, 0);
    CHECK((a.increments - a2.increments).norm() == 0.0);
    CHECK((a.increments - b.increments).norm() != 0.0);
}

TEST_CASE("picard: deterministic ODE oracle u' = -u") {
    auto g = SpaceGrid::make(8);
    auto tg = TimeGrid::make(1.0, 200);
    auto ps = drift_only(g, 1.0);
    EvolutionFamily ef(ps.fam, g, tg, Scheme::BackwardEuler, 1);
    PicardConfig cfg;
    cfg.ensemble = 1;
    cfg.tol = 1e-10;
    auto sol = picard_solve(ps, ef, cfg);
    CHECK(sol.report.reached_half);
    for (double qv : sol.report.q) CHECK(qv <= 0.9);
    const auto& u = sol.members[0];
    for (int k = 0; k <= tg.m_steps; k += 40) {
        const double expect = std::exp(-tg.times[k]);
        CHECK(u.fields[k].values[0] == doctest::Approx(expect).epsilon(0.01));
    }
}

TEST_CASE("picard: linear heat problem matches the evolution family") {
    // f = 0, g = 0: the fixed point is P(t,0)u0 after one iteration
    auto g = SpaceGrid::make(32);
    auto tg = TimeGrid::make(0.5, 64);
    ProblemSpec ps;
    ps.fam = OperatorFamily::constant_laplacian();
    ps.fam.w = 1.0;
    ps.noise = make_model(2.0, 4, g);
    ps.f = [](double, double, double) { return 0.0; };
    ps.g = [](double, double, double) { return 0.0; };
    ps.u0 = Field::of(g, [](double s) { return std::cos(M_PI * s); });
    ps.T = 0.5;
    EvolutionFamily ef(ps.fam, g, tg, Scheme::BackwardEuler, 2);
    PicardConfig cfg;
    cfg.ensemble = 2;
    auto sol = picard_solve(ps, ef, cfg);
    Field ref = ef.apply(0.5, 0.0, ps.u0);
    CHECK((sol.members[0].fields[tg.m_steps].values - ref.values).lpNorm<Eigen::Infinity>() <
          1e-10);
    CHECK(sol.report.iters <= 3);
}

TEST_CASE("picard: geometric Brownian motion second moment") {
    // dU = sigma U dW with a flat mode: E U(T)^2 = u0^2 exp(sigma^2 lambda T)
    auto g = SpaceGrid::make(8);
    auto tg = TimeGrid::make(1.0, 128);
    ProblemSpec ps;
    ps.fam = OperatorFamily::zero();
    ps.noise = make_flat_mode(g, 0.25);
    ps.f = [](double, double, double) { return 0.0; };
    const double sigma = 1.0;
    ps.g = [sigma](double, double, double u) { return sigma * u; };
    ps.L_g = sigma;
    ps.u0 = Field::constant(g, 1.0);
    ps.T = 1.0;
    EvolutionFamily ef(ps.fam, g, tg, Scheme::BackwardEuler, 1);
    PicardConfig cfg;
    cfg.ensemble = 2000;
    cfg.seed = 42;
    cfg.tol = 1e-9;
    auto sol = picard_solve(ps, ef, cfg);
    double m2 = 0.0;
    for (const auto& u : sol.members) {
        const double v = u.fields[tg.m_steps].values[0];
        m2 += v * v;
    }
    m2 /= cfg.ensemble;
    CHECK(m2 == doctest::Approx(std::exp(0.25)).epsilon(0.08));
    for (double qv : sol.report.q) CHECK(qv <= 0.9);
}

TEST_CASE("picard: worker count does not change the result") {
    auto g = SpaceGrid::make(16);
    auto tg = TimeGrid::make(0.5, 32);
    ProblemSpec ps;
    ps.fam = OperatorFamily::constant_laplacian();
    ps.fam.w = 1.0;
    ps.noise = make_model(2.0, 4, g);
    ps.f = [](double, double, double u) { return std::tanh(u); };
    ps.L_f = 1.0;
    ps.g = [](double, double, double u) { return 0.5 * u; };
    ps.L_g = 0.5;
    ps.u0 = Field::constant(g, 1.0);
    ps.T = 0.5;
    EvolutionFamily ef(ps.fam, g, tg, Scheme::BackwardEuler, 1);
    PicardConfig c1, c4;
    c1.ensemble = c4.ensemble = 8;
    c1.seed = c4.seed = 9;
    c1.workers = 1;
    c4.workers = 4;
    auto s1 = picard_solve(ps, ef, c1);
    auto s4 = picard_solve(ps, ef, c4);
    for (int m = 0; m < 8; ++m)
        for (int k = 0; k <= 32; ++k)
            CHECK((s1.members[m].fields[k].values - s4.members[m].fields[k].values)
                      .lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("weighted_norm: exponential discount") {
    auto g = SpaceGrid::make(8);
    auto tg = TimeGrid::make(1.0, 4);
    Path p = Path::zero(g, tg);
    for (int k = 0; k <= 4; ++k) p.fields[k] = Field::constant(g, 1.0);
    PicardConfig cfg;
    cfg.r = 2.0;
    cfg.p_weight = 0.0;
    CHECK(weighted_norm({p}, cfg, 0.0) == doctest::Approx(1.0));
    cfg.p_weight = 3.0;
    CHECK(weighted_norm({p}, cfg, 0.0) == doctest::Approx(1.0));  // max at t = 0
}

TEST_CASE("local_solve: ODE blow-up u' = u^2 with nested stopping times") {
    // u0 = 2: u(t) = 2/(1-2t), explosion at t* = 1/2, tau_n = 1/2 - 1/n
    auto g = SpaceGrid::make(4);
    auto tg = TimeGrid::make(1.0, 2000);
    ProblemSpec ps;
    ps.fam = OperatorFamily::zero();
    ps.noise = make_flat_mode(g, 1.0);
    ps.f = [](double, double, double u) { return u * u; };
    ps.lipschitz_global = false;
    ps.g = [](double, double, double) { return 0.0; };
    ps.u0 = Field::constant(g, 2.0);
    ps.T = 1.0;
    EvolutionFamily ef(ps.fam, g, tg, Scheme::BackwardEuler, 1);
    PicardConfig cfg;
    cfg.ensemble = 1;
    auto loc = local_solve(ps, ef, cfg, 10);
    REQUIRE(loc.tau.size() == 1);
    REQUIRE(int(loc.tau[0].size()) == 10);
    // tau_n nondecreasing in n and close to 1/2 - 1/n for the sup norm
    for (int n = 3; n <= 10; ++n) {
        const double taun = tg.times[loc.tau[0][n - 1]];
        CHECK(taun >= tg.times[loc.tau[0][n - 2]]);
        CHECK(taun == doctest::Approx(0.5 - 1.0 / n).epsilon(0.1));
    }
    CHECK(loc.exploded[0]);
    CHECK(loc.explosion_estimate[0] == doctest::Approx(0.5).epsilon(0.05));
    CHECK(loc.to_json().find("explosion_estimate") != std::string::npos);
}

TEST_CASE("local_solve: globally bounded drift never explodes") {
    auto g = SpaceGrid::make(4);
    auto tg = TimeGrid::make(1.0, 200);
    ProblemSpec ps;
    ps.fam = OperatorFamily::zero();
    ps.noise = make_flat_mode(g, 1.0);
    ps.f = [](double, double, double u) { return std::tanh(u); };
    ps.g = [](double, double, double) { return 0.0; };
    ps.u0 = Field::constant(g, 0.5);
    ps.T = 1.0;
    EvolutionFamily ef(ps.fam, g, tg, Scheme::BackwardEuler, 1);
    PicardConfig cfg;
    cfg.ensemble = 1;
    auto loc = local_solve(ps, ef, cfg, 6);
    CHECK_FALSE(loc.exploded[0]);
    CHECK(loc.tau[0].back() == tg.m_steps);
}
