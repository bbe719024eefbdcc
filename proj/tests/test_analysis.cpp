#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spde/analysis.hpp"

#include <cmath>

using namespace spde;

namespace {

std::vector<int> dyadic_lags(int m) {
    std::vector<int> lags;
    for (int l = 1; l <= m / 4; l *= 2) lags.push_back(l);
    return lags;
}

ProblemSpec heat_with_noise(const SpaceGrid& g, double T) {
    ProblemSpec ps;
    ps.fam = OperatorFamily::constant_laplacian();
    ps.fam.w = 1.0;
    ps.noise = make_model(2.0, 8, g);
    ps.f = [](double, double, double u) { return -0.5 * u; };
    ps.L_f = 0.5;
    ps.g = [](double, double, double) { return 0.5; };
    ps.C_g = 0.5;
    ps.u0 = Field::constant(g, 1.0);
    ps.T = T;
    return ps;
}

} // namespace

TEST_CASE("estimate_holder: smooth paths report exponent one") {
    // median increments of a differentiable path scale linearly with the lag
    auto g = SpaceGrid::make(4);
    auto tg = TimeGrid::make(1.0, 256);
    std::vector<Path> ens;
    for (int m = 0; m < 40; ++m) {
        Path p = Path::zero(g, tg);
        for (int k = 0; k <= tg.m_steps; ++k)
            p.fields[k] =
                Field::constant(g, (1.0 + 0.01 * m) * std::sin(2.0 * tg.times[k]));
        ens.push_back(std::move(p));
    }
    auto est = estimate_holder(ens, SpatialNorm::Sup, dyadic_lags(tg.m_steps));
    CHECK_FALSE(est.degenerate);
    CHECK(est.est == doctest::Approx(1.0).epsilon(0.1));
    CHECK(est.lo <= est.est);
    CHECK(est.hi >= est.est);
}

TEST_CASE("estimate_holder: Brownian control has exponent 1/2") {
    auto g = SpaceGrid::make(4);
    auto tg = TimeGrid::make(1.0, 512);
    auto m = make_flat_mode(g, 1.0);
    std::vector<Path> ens;
    for (int member = 0; member < 60; ++member) {
        auto W = sample_member(m, tg, 77, member);
        Path p = Path::zero(g, tg);
        for (int k = 0; k <= tg.m_steps; ++k)
            p.fields[k] = Field::constant(g, W.cumulative(0, k));
        ens.push_back(std::move(p));
    }
    auto est = estimate_holder(ens, SpatialNorm::Sup, dyadic_lags(tg.m_steps));
    CHECK(est.lo <= 0.5);
    CHECK(est.hi >= 0.5);
    CHECK(est.est == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("estimate_holder: guards and degenerate ensembles") {
    auto g = SpaceGrid::make(4);
    auto tg = TimeGrid::make(1.0, 64);
    std::vector<Path> small(5, Path::zero(g, tg));
    CHECK_THROWS_AS(estimate_holder(small, SpatialNorm::Sup, dyadic_lags(64)), std::domain_error);
    std::vector<Path> flat(40, Path::zero(g, tg));
    auto est = estimate_holder(flat, SpatialNorm::Sup, dyadic_lags(64));
    CHECK(est.degenerate);
    CHECK(std::isinf(est.est));
    CHECK_THROWS_AS(estimate_holder(flat, SpatialNorm::Sup, {1, 2}), std::domain_error);
}

TEST_CASE("adjoint test function satisfies the terminal condition") {
    auto g = SpaceGrid::make(16);
    auto tg = TimeGrid::make(0.5, 16);
    EvolutionFamily ef(OperatorFamily::linear_in_time(0.5), g, tg, Scheme::BackwardEuler, 2);
    auto xs = Field::of(g, [](double s) { return std::cos(M_PI * s); });
    auto phi = adjoint_test_function(ef, 16, xs);
    REQUIRE(int(phi.size()) == 17);
    CHECK((phi[16].values - xs.values).lpNorm<Eigen::Infinity>() == 0.0);
    // duality against the forward flow at an interior node
    const Eigen::VectorXd w = quad_weights(g);
    auto y = Field::of(g, [](double s) { return s; });
    Field fwd = ef.apply(tg.times[16], tg.times[4], y);
    const double lhs = (w.asDiagonal() * fwd.values).dot(xs.values);
    const double rhs = (w.asDiagonal() * phi[4].values).dot(y.values);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("variational residual shrinks with dt for a solved member") {
    auto g = SpaceGrid::make(32);
    auto m = make_model(2.0, 8, g);
    auto xs = Field::of(g, [](double s) { return std::cos(M_PI * s); });
    auto fineW = sample_member(m, TimeGrid::make(0.5, 256), 3, 0);
    std::vector<double> rms;
    for (int msteps : {64, 128, 256}) {
        auto tg = TimeGrid::make(0.5, msteps);
        auto ps = heat_with_noise(g, 0.5);
        EvolutionFamily ef(ps.fam, g, tg, Scheme::BackwardEuler, 1);
        PicardConfig cfg;
        cfg.ensemble = 1;
        auto W = fineW.coarsen(256 / msteps);
        auto sol = picard_solve(ps, ef, cfg, {W});
        const double r = variational_residual(sol.members[0], sol.wiener[0], ef, ps,
                                              msteps, xs);
        rms.push_back(std::abs(r));
    }
    CHECK(rms[1] < rms[0]);
    CHECK(rms[2] < rms[1]);
    const double order = std::log2(rms[0] / rms[2]) / 2.0;
    CHECK(order >= 0.4);
}

TEST_CASE("run_ensemble: deterministic report across worker counts") {
    auto g = SpaceGrid::make(32);
    ScenarioRun sc;
    sc.id = "unit";
    sc.ps = heat_with_noise(g, 0.25);
    sc.cfg.ensemble = 40;
    sc.cfg.seed = 5;
    sc.n_cells = 32;
    sc.m_steps = 64;
    sc.substeps = 1;
    sc.checks = {"contraction", "holder", "variational"};
    auto run_with = [&](int workers) {
        ScenarioRun s = sc;
        s.cfg.workers = workers;
        return run_ensemble(s).to_json();
    };
    const std::string j1 = run_with(1);
    const std::string j3 = run_with(3);
    CHECK(j1 == j3);
    CHECK(j1.find("\"scenario_id\"") != std::string::npos);
    CHECK(j1.find("exponents") != std::string::npos);
}

TEST_CASE("run_ensemble rejects unknown check ids") {
    auto g = SpaceGrid::make(16);
    ScenarioRun sc;
    sc.ps = heat_with_noise(g, 0.25);
    sc.n_cells = 16;
    sc.m_steps = 16;
    sc.cfg.ensemble = 30;
    sc.checks = {"nonsense"};
    CHECK_THROWS_AS(run_ensemble(sc), std::domain_error);
}
