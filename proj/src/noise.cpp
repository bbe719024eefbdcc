#include "spde/noise.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace spde {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

double to_unit(std::uint64_t x) {
    // (0,1]: top 53 bits, shifted away from zero.
    return (double(x >> 11) + 1.0) * 0x1p-53;
}

} // namespace

double counter_gauss(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    const std::uint64_t k = splitmix64(seed ^ splitmix64(stream ^ splitmix64(counter)));
    const double u1 = to_unit(splitmix64(k ^ 0xA5A5A5A5A5A5A5A5ull));
    const double u2 = to_unit(splitmix64(k ^ 0x5A5A5A5A5A5A5A5Aull));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

NoiseModel make_model(double gamma, int N, const SpaceGrid& grid) {
    if (!(gamma > 0.0)) throw std::domain_error("make_model: gamma > 0 required");
    if (N < 1) throw std::domain_error("make_model: N >= 1 required");
    if (N > grid.n_cells - 1)
        throw std::domain_error("make_model: N <= n_cells - 1 required for discrete orthonormality");
    NoiseModel m;
    m.gamma = gamma;
    m.lambdas.resize(N);
    m.modes.reserve(N);
    for (int n = 1; n <= N; ++n) {
        m.lambdas[n - 1] = std::pow(double(n), -gamma);
        m.modes.push_back(
            Field::of(grid, [n](double s) { return std::sqrt(2.0) * std::cos(n * M_PI * s); }));
    }
    m.regime = check_cond_linfty(m).pass ? CovarianceRegime::Linf : CovarianceRegime::Lq;
    return m;
}

NoiseModel make_flat_mode(const SpaceGrid& grid, double lambda) {
    NoiseModel m;
    m.gamma = 0.0;
    m.lambdas = Eigen::VectorXd::Constant(1, lambda);
    m.modes.push_back(Field::constant(grid, 1.0));
    m.regime = CovarianceRegime::Linf;
    return m;
}

double NoiseModel::trace_tail() const {
    if (gamma <= 1.0) return std::numeric_limits<double>::infinity();
    const int N = n_modes();
    // integral tail bound for sum_{n>N} n^{-gamma}
    return std::pow(double(N), 1.0 - gamma) / (gamma - 1.0);
}

CondCheck check_cond_linfty(const NoiseModel& m) {
    const int N = m.n_modes();
    CondCheck c;
    double tail = 0.0;
    const int q0 = (3 * N) / 4;
    const double inf_p = std::numeric_limits<double>::infinity();
    for (int n = 0; n < N; ++n) {
        const double term = m.lambdas[n] * std::pow(lp_norm(m.modes[n], inf_p), 2);
        c.sum += term;
        if (n >= q0) tail += term;
    }
    c.pass = N >= 4 && c.sum > 0.0 && tail < 0.01 * c.sum;
    if (N < 4) c.pass = c.sum > 0.0;  // tiny models: no meaningful tail estimate
    return c;
}

CondCheck check_cond_lq(const NoiseModel& m, double q, double beta) {
    if (!(beta > 0.0 && beta < 0.5)) throw std::domain_error("check_cond_lq: beta in (0,1/2)");
    if (!(q > 1.0 / (1.0 - 2.0 * beta)))
        throw std::domain_error("check_cond_lq: q > 1/(1-2 beta) required (condCovb)");
    const int N = m.n_modes();
    CondCheck c;
    double tail = 0.0;
    const int q0 = (3 * N) / 4;
    for (int n = 0; n < N; ++n) {
        const double term = m.lambdas[n] * std::pow(lp_norm(m.modes[n], q), 2);
        c.sum += term;
        if (n >= q0) tail += term;
    }
    c.pass = N >= 4 ? (c.sum > 0.0 && tail < 0.01 * c.sum) : c.sum > 0.0;
    return c;
}

WienerPath sample(const NoiseModel& m, const TimeGrid& tg, std::uint64_t seed) {
    WienerPath w;
    w.seed = seed;
    const int N = m.n_modes();
    w.increments.resize(N, tg.m_steps);
    const double sd = std::sqrt(tg.dt);
    for (int n = 0; n < N; ++n)
        for (int k = 0; k < tg.m_steps; ++k)
            w.increments(n, k) = sd * counter_gauss(seed, std::uint64_t(n), std::uint64_t(k));
    return w;
}

double WienerPath::cumulative(int mode, int k) const {
    double s = 0.0;
    for (int j = 0; j < k; ++j) s += increments(mode, j);
    return s;
}

WienerPath WienerPath::coarsen(int factor) const {
    if (factor < 1 || increments.cols() % factor != 0)
        throw std::domain_error("coarsen: factor must divide m_steps");
    WienerPath w;
    w.seed = seed;
    w.generator_id = generator_id + "-coarsened";
    const int mc = int(increments.cols()) / factor;
    w.increments.setZero(increments.rows(), mc);
    for (int n = 0; n < increments.rows(); ++n)
        for (int k = 0; k < mc; ++k)
            for (int j = 0; j < factor; ++j) w.increments(n, k) += increments(n, k * factor + j);
    return w;
}

HsResult hs_norm(const std::vector<Field>& columns) {
    HsResult r;
    if (columns.empty()) return r;
    r.dominating = Field::zero(columns[0].grid);
    double sq = 0.0;
    for (const auto& g : columns) {
        const double n2 = lp_norm(g, 2.0);
        sq += n2 * n2;
        r.dominating.values.array() += g.values.array().square();
    }
    r.dominating.values = r.dominating.values.array().sqrt();
    r.hs = std::sqrt(sq);
    return r;
}

std::string NoiseModel::to_json() const {
    nlohmann::json j;
    j["gamma"] = gamma;
    j["N"] = n_modes();
    j["regime"] = regime == CovarianceRegime::Linf ? "Linf" : "Lq";
    j["lambda"] = std::vector<double>(lambdas.data(), lambdas.data() + lambdas.size());
    return j.dump(2);
}

void write_csv(std::ostream& os, const WienerPath& w) {
    os << "mode";
    for (int k = 0; k < w.increments.cols(); ++k) os << ",dW" << k;
    os << "\n";
    for (int n = 0; n < w.increments.rows(); ++n) {
        os << n + 1;
        for (int k = 0; k < w.increments.cols(); ++k) os << "," << w.increments(n, k);
        os << "\n";
    }
}

} // namespace spde
