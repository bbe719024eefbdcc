#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spde/evolution.hpp"

#include <cmath>

using namespace spde;

TEST_CASE("apply: identity at coincident times, probability conservation") {
    auto g = SpaceGrid::make(32);
    auto tg = TimeGrid::make(1.0, 32);
    EvolutionFamily ef(OperatorFamily::constant_laplacian(), g, tg, Scheme::BackwardEuler, 2);

    auto x = Field::of(g, [](double s) { return std::cos(2.0 * M_PI * s) + 0.3; });
    Field y = ef.apply(0.5, 0.5, x);
    CHECK((y.values - x.values).lpNorm<Eigen::Infinity>() == 0.0);

    // Neumann heat flow preserves the trapezoidal mean
    const Eigen::VectorXd w = quad_weights(g);
    Field z = ef.apply(1.0, 0.0, x);
    CHECK(w.dot(z.values) == doctest::Approx(w.dot(x.values)).epsilon(1e-10));
    CHECK_THROWS_AS(ef.apply(0.0, 0.5, x), std::domain_error);
}

TEST_CASE("cocycle identity to 1e-12") {
    auto g = SpaceGrid::make(24);
    auto tg = TimeGrid::make(1.0, 16);
    EvolutionFamily ef(OperatorFamily::linear_in_time(0.5), g, tg, Scheme::BackwardEuler, 4);
    auto x = Field::of(g, [](double s) { return s * s - s; });
    CHECK(ef.cocycle_defect(0.75, 0.5, 0.25, x) <= 1e-12);
    CHECK(ef.cocycle_defect(1.0, 0.5, 0.0, x) <= 1e-12);
}

TEST_CASE("heat equation mode decay oracle") {
    // dt = 1e-3, n = 128: e^{-pi^2 t} cos(pi s) within 5% at t = 0.1
    auto g = SpaceGrid::make(128);
    auto tg = TimeGrid::make(0.1, 100);
    for (auto scheme : {Scheme::BackwardEuler, Scheme::CrankNicolson}) {
        EvolutionFamily ef(OperatorFamily::constant_laplacian(), g, tg, scheme, 1);
        auto x = Field::of(g, [](double s) { return std::cos(M_PI * s); });
        Field y = ef.apply(0.1, 0.0, x);
        auto exact = Field::of(g, [](double s) {
            return std::exp(-M_PI * M_PI * 0.1) * std::cos(M_PI * s);
        });
        const double rel = (y.values - exact.values).lpNorm<Eigen::Infinity>() /
                           exact.values.lpNorm<Eigen::Infinity>();
        CHECK(rel <= 0.05);
    }
}

TEST_CASE("adjoint stepping matches the transpose in the weighted product") {
    auto g = SpaceGrid::make(16);
    auto tg = TimeGrid::make(0.5, 8);
    EvolutionFamily ef(OperatorFamily::linear_in_time(1.0), g, tg, Scheme::CrankNicolson, 2);
    const Eigen::VectorXd w = quad_weights(g);
    auto x = Field::of(g, [](double s) { return std::sin(3.0 * s); });
    auto y = Field::of(g, [](double s) { return std::cos(5.0 * s); });
    // <P(t,s)x, y>_W = <x, P(t,s)* y>_W
    Field px = ef.apply_idx(12, 3, x);
    Field py = ef.apply_adjoint_idx(12, 3, y);
    const double lhs = (w.asDiagonal() * px.values).dot(y.values);
    const double rhs = (w.asDiagonal() * py.values).dot(x.values);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-11));
}

TEST_CASE("smoothing constant: autonomous spectral oracle") {
    // For A self-adjoint autonomous, ||(w-A)^{1/2} e^{hA} x|| (h)^{1/2} / ||x||
    // is bounded by sup_s sqrt((w+s)h) e^{-sh} <= sqrt(max(wh, 1/(2e)) ... just
    // check finiteness and stability across sample sets.
    auto g = SpaceGrid::make(32);
    auto tg = TimeGrid::make(1.0, 64);
    EvolutionFamily ef(OperatorFamily::constant_laplacian(), g, tg, Scheme::BackwardEuler, 2);
    std::vector<EvolutionFamily::SampleTriple> samples;
    auto x = Field::of(g, [](double s) { return std::cos(M_PI * s) + 0.25; });
    for (double s : {0.0, 0.25}) {
        for (double t : {0.5, 0.75, 1.0}) samples.push_back({s, t, x});
    }
    auto mc = ef.smoothing_constant(0.5, 0.0, samples);
    CHECK(std::isfinite(mc.C));
    CHECK(mc.C > 0.0);
    for (double r : mc.ratios) CHECK(r <= mc.C + 1e-12);
}

TEST_CASE("singular bound decays like (t-s)^{-theta}") {
    auto g = SpaceGrid::make(32);
    auto tg = TimeGrid::make(1.0, 128);
    EvolutionFamily ef(OperatorFamily::constant_laplacian(), g, tg, Scheme::BackwardEuler, 2);
    auto x = Field::of(g, [](double s) { return std::cos(2.0 * M_PI * s); });
    std::vector<EvolutionFamily::SampleTriple> samples;
    for (double gap : {0.0625, 0.125, 0.25, 0.5}) samples.push_back({0.25, 0.25 + gap, x});
    auto mc = ef.singular_bound(0.4, samples);
    CHECK(std::isfinite(mc.C));
    CHECK(mc.C > 0.0);
    // spectral bound for an eigenmode: ((w-lam)(t-s))^theta e^{lam(t-s)} with
    // w = 1, so every ratio is below sup_y (y + t-s)^0.4 e^{-y} < 1
    for (double r : mc.ratios) CHECK(r <= 1.0);
}

TEST_CASE("frac_power_apply agrees with the standalone matrix power") {
    auto g = SpaceGrid::make(16);
    auto tg = TimeGrid::make(1.0, 4);
    EvolutionFamily ef(OperatorFamily::constant_laplacian(), g, tg, Scheme::BackwardEuler, 1);
    auto x = Field::of(g, [](double s) { return s; });
    Field y = ef.frac_power_apply(0, 0.5, x);
    auto op = assemble(OperatorFamily::constant_laplacian(), g, 0.0);
    auto half = frac_power(op, 0.5, ef.family().w);
    CHECK((y.values - half.matrix * x.values).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("degenerate family A = 0 is the identity flow") {
    auto g = SpaceGrid::make(8);
    auto tg = TimeGrid::make(1.0, 8);
    EvolutionFamily ef(OperatorFamily::zero(), g, tg, Scheme::BackwardEuler, 1);
    auto x = Field::of(g, [](double s) { return 3.0 * s - 1.0; });
    Field y = ef.apply(1.0, 0.0, x);
    CHECK((y.values - x.values).lpNorm<Eigen::Infinity>() < 1e-13);
}

TEST_CASE("scheme order: CN beats BE on the heat mode") {
    auto g = SpaceGrid::make(128);
    auto tg = TimeGrid::make(0.1, 20);
    auto x = Field::of(g, [](double s) { return std::cos(M_PI * s); });
    const double exact = std::exp(-M_PI * M_PI * 0.1);
    double errs[2];
    int i = 0;
    for (auto scheme : {Scheme::BackwardEuler, Scheme::CrankNicolson}) {
        EvolutionFamily ef(OperatorFamily::constant_laplacian(), g, tg, scheme, 1);
        Field y = ef.apply(0.1, 0.0, x);
        errs[i++] = std::abs(y.values[0] - exact);
    }
    CHECK(errs[1] < errs[0]);
}
