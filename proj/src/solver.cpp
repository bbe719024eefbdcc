#include "spde/solver.hpp"

#include "spde/parallel.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <stdexcept>

namespace spde {

void ProblemSpec::validate() const {
    if (!(a + theta_F < 1.0))
        throw std::domain_error("ProblemSpec: a + theta_F >= 1 violates (H2)");
    if (!(a + theta_B < 0.5))
        throw std::domain_error("ProblemSpec: a + theta_B >= 1/2 violates (H3)");
    if (u0.values.size() == 0) throw std::domain_error("ProblemSpec: u0 not set");
    if (!u0.values.allFinite()) throw std::domain_error("ProblemSpec: u0 not finite");
}

NemytskiiValue nemytskii(const ProblemSpec& ps, double t, const Field& u) {
    if (!u.values.allFinite()) throw std::runtime_error("nemytskii: non-finite state");
    NemytskiiValue nv;
    nv.Fu = Field::zero(u.grid);
    const auto& s = u.grid.nodes;
    for (int i = 0; i <= u.grid.n_cells; ++i) nv.Fu.values[i] = ps.f(t, s[i], u.values[i]);
    const int N = ps.noise.n_modes();
    nv.Bu.reserve(N);
    for (int n = 0; n < N; ++n) {
        Field col = Field::zero(u.grid);
        const double sq = std::sqrt(ps.noise.lambdas[n]);
        for (int i = 0; i <= u.grid.n_cells; ++i)
            col.values[i] = ps.g(t, s[i], u.values[i]) * sq * ps.noise.modes[n].values[i];
        nv.Bu.push_back(std::move(col));
    }
    return nv;
}

WienerPath sample_member(const NoiseModel& m, const TimeGrid& tg, std::uint64_t seed,
                         int member) {
    WienerPath w;
    w.seed = seed;
    const int N = m.n_modes();
    w.increments.resize(N, tg.m_steps);
    const double sd = std::sqrt(tg.dt);
    for (int n = 0; n < N; ++n) {
        const std::uint64_t stream = (std::uint64_t(member) << 20) | std::uint64_t(n);
        for (int k = 0; k < tg.m_steps; ++k)
            w.increments(n, k) = sd * counter_gauss(seed, stream, std::uint64_t(k));
    }
    return w;
}

namespace {

/// Fused single pass: L(phi)(t_{l+1}) = P-step(L(phi)(t_l) + dt Theta_F F(phi_l)
/// + Theta_B B(phi_l) dW_l). Identical to the sum of the three convolution
/// recursions.
Path apply_fixed_point_map(const ProblemSpec& ps, const EvolutionFamily& ef,
                           const WienerPath& W, const Path& phi) {
    const int m = ef.tgrid().m_steps;
    const double dt = ef.tgrid().dt;
    Path out = Path::zero(ef.grid(), ef.tgrid());
    out.fields[0] = ps.u0;
    Field acc = ps.u0;
    for (int l = 0; l < m; ++l) {
        const double t = ef.tgrid().times[l];
        NemytskiiValue nv = nemytskii(ps, t, phi.fields[l]);
        Field drift = ps.theta_F == 0.0
                          ? nv.Fu
                          : ef.frac_power_apply(l * ef.substeps(), ps.theta_F, nv.Fu);
        Field stoch = Field::zero(ef.grid());
        for (int n = 0; n < int(nv.Bu.size()); ++n)
            stoch.values += W.increments(n, l) * nv.Bu[n].values;
        if (ps.theta_B != 0.0)
            stoch = ef.frac_power_apply(l * ef.substeps(), ps.theta_B, stoch);
        acc.values += dt * drift.values + stoch.values;
        acc = ef.apply_idx((l + 1) * ef.substeps(), l * ef.substeps(), acc);
        out.fields[l + 1] = acc;
    }
    return out;
}

double spatial_a_norm(const EvolutionFamily* ef, double a, int node, const Field& x) {
    if (a == 0.0 || !ef) return lp_norm(x, 2.0);
    const int j = node * ef->substeps();
    return interp_norm(ef->operator_at(j), ef->spectral_at(j), a, ef->family().w, x);
}

/// Per-node L^r(Omega) norms of an ensemble of paths.
std::vector<double> node_lr_norms(const std::vector<Path>& ensemble, double r, double a,
                                  const EvolutionFamily* ef) {
    const int m = ensemble[0].tgrid.m_steps;
    std::vector<double> out(m + 1, 0.0);
    for (int k = 0; k <= m; ++k) {
        double acc = 0.0;
        for (const auto& p : ensemble)
            acc += std::pow(spatial_a_norm(ef, a, k, p.fields[k]), r);
        out[k] = std::pow(acc / double(ensemble.size()), 1.0 / r);
    }
    return out;
}

double weighted_sup(const std::vector<double>& node_norms, const std::vector<double>& times,
                    double p) {
    double best = 0.0;
    for (size_t k = 0; k < node_norms.size(); ++k)
        best = std::max(best, std::exp(-p * times[k]) * node_norms[k]);
    return best;
}

} // namespace

std::vector<Path> picard_step(const ProblemSpec& ps, const EvolutionFamily& ef,
                              const std::vector<WienerPath>& W, const std::vector<Path>& phi,
                              int workers) {
    std::vector<Path> out(phi.size());
    parallel_for(int(phi.size()), workers,
                 [&](int i) { out[i] = apply_fixed_point_map(ps, ef, W[i], phi[i]); });
    return out;
}

double weighted_norm(const std::vector<Path>& ensemble, const PicardConfig& cfg, double a,
                     const EvolutionFamily* ef) {
    if (ensemble.empty()) throw std::domain_error("weighted_norm: empty ensemble");
    return weighted_sup(node_lr_norms(ensemble, cfg.r, a, ef), ensemble[0].tgrid.times,
                        cfg.p_weight);
}

EnsembleSolution picard_solve(const ProblemSpec& ps, const EvolutionFamily& ef,
                              const PicardConfig& cfg) {
    std::vector<WienerPath> wiener;
    wiener.reserve(cfg.ensemble);
    for (int i = 0; i < cfg.ensemble; ++i)
        wiener.push_back(sample_member(ps.noise, ef.tgrid(), cfg.seed, i));
    return picard_solve(ps, ef, cfg, std::move(wiener));
}

EnsembleSolution picard_solve(const ProblemSpec& ps, const EvolutionFamily& ef,
                              const PicardConfig& cfg, std::vector<WienerPath> wiener) {
    ps.validate();
    if (!ps.lipschitz_global)
        throw std::domain_error("picard_solve: global Lipschitz data required (use local_solve)");
    const int M = cfg.ensemble;
    const int m = ef.tgrid().m_steps;

    EnsembleSolution sol;
    sol.wiener = std::move(wiener);

    // Iteration zero: phi^0(t) = P(t,0) u0 (same path for every member).
    Path phi0 = Path::zero(ef.grid(), ef.tgrid());
    phi0.fields[0] = ps.u0;
    for (int l = 0; l < m; ++l)
        phi0.fields[l + 1] = ef.apply_idx((l + 1) * ef.substeps(), l * ef.substeps(), phi0.fields[l]);
    sol.members.assign(M, phi0);

    // Weight-escalation schedule; escalation only re-reads stored node norms.
    std::vector<double> p_schedule{cfg.p_weight};
    if (cfg.auto_weight) {
        double p = std::max(cfg.p_weight, 1.0);
        while (p <= 1024.0) {
            p_schedule.push_back(p);
            p *= 2.0;
        }
    }
    size_t p_idx = 0;
    double p = p_schedule[p_idx];

    std::vector<std::vector<double>> diff_node_norms;  // per iteration
    auto q_at = [&](size_t i, double pw) {
        const double num = weighted_sup(diff_node_norms[i], ef.tgrid().times, pw);
        const double den = weighted_sup(diff_node_norms[i - 1], ef.tgrid().times, pw);
        return den > 0.0 ? num / den : 0.0;
    };

    ContractionReport& rep = sol.report;
    for (int it = 0; it < cfg.max_iter; ++it) {
        std::vector<Path> next = picard_step(ps, ef, sol.wiener, sol.members, cfg.workers);
        std::vector<Path> diff(M, Path::zero(ef.grid(), ef.tgrid()));
        for (int i = 0; i < M; ++i)
            for (int k = 0; k <= m; ++k) diff[i].fields[k] = next[i].fields[k] - sol.members[i].fields[k];
        diff_node_norms.push_back(node_lr_norms(diff, cfg.r, ps.a, &ef));
        sol.members = std::move(next);
        rep.iters = it + 1;

        const double resid = weighted_sup(diff_node_norms.back(), ef.tgrid().times, p);
        rep.final_residual = resid;
        if (resid < cfg.tol) break;

        if (cfg.auto_weight && diff_node_norms.size() >= 3) {
            const size_t i = diff_node_norms.size() - 1;
            while (p_idx + 1 < p_schedule.size() && (q_at(i, p) >= 0.9 || q_at(i - 1, p) >= 0.9)) {
                ++p_idx;
                p = p_schedule[p_idx];
            }
            if (p_idx + 1 == p_schedule.size() && q_at(i, p) >= 1.0 && q_at(i - 1, p) >= 1.0)
                throw std::runtime_error(
                    "picard_solve: no contraction after weight escalation (q >= 1 at p=" +
                    std::to_string(p) + ", residual=" + std::to_string(resid) + ")");
        }
    }
    rep.p_weight = p;
    for (size_t i = 1; i < diff_node_norms.size(); ++i) rep.q.push_back(q_at(i, p));
    rep.reached_half = !rep.q.empty() && rep.q.back() <= 0.5;
    return sol;
}

LocalSolution local_solve(const ProblemSpec& ps, const EvolutionFamily& ef,
                          const PicardConfig& cfg, int n_levels) {
    ps.validate();
    if (n_levels < 1) throw std::domain_error("local_solve: n_levels >= 1");
    const int M = cfg.ensemble;
    const int m = ef.tgrid().m_steps;
    const double dt = ef.tgrid().dt;

    LocalSolution out;
    out.n_levels = n_levels;
    out.members.resize(M);
    out.tau.assign(M, std::vector<int>(n_levels, m));
    out.exploded.assign(M, false);
    out.explosion_estimate.assign(M, ef.tgrid().T);

    std::vector<WienerPath> wiener;
    wiener.reserve(M);
    for (int i = 0; i < M; ++i) wiener.push_back(sample_member(ps.noise, ef.tgrid(), cfg.seed, i));

    parallel_for(M, cfg.workers, [&](int i) {
        Path prev_level;
        for (int lvl = 1; lvl <= n_levels; ++lvl) {
            const double radius = double(lvl);
            Path path = Path::zero(ef.grid(), ef.tgrid());
            path.fields[0] = ps.u0;
            Field u = ps.u0;
            int tau = m;
            bool stopped = false;
            for (int l = 0; l <= m; ++l) {
                const double norm_a = spatial_a_norm(&ef, ps.a, l, u);
                if (!stopped && norm_a >= radius) {
                    tau = l;
                    stopped = true;
                }
                if (stopped) {
                    for (int k = l; k <= m; ++k) path.fields[k] = u;  // frozen after tau
                    break;
                }
                if (l == m) break;
                // Clamp keeps arithmetic bitwise identical across levels while inactive.
                Field uc = u;
                if (norm_a >= radius) uc.values *= radius / norm_a;
                NemytskiiValue nv = nemytskii(ps, ef.tgrid().times[l], uc);
                Field stoch = Field::zero(ef.grid());
                for (int n = 0; n < int(nv.Bu.size()); ++n)
                    stoch.values += wiener[i].increments(n, l) * nv.Bu[n].values;
                u.values += dt * nv.Fu.values + stoch.values;
                u = ef.apply_idx((l + 1) * ef.substeps(), l * ef.substeps(), u);
                if (!u.values.allFinite()) {
                    tau = l + 1;
                    stopped = true;
                    u = path.fields[l];
                    for (int k = l + 1; k <= m; ++k) path.fields[k] = u;
                    break;
                }
                path.fields[l + 1] = u;
            }
            out.tau[i][lvl - 1] = tau;
            // Nesting: levels agree before the lower level's stopping node.
            if (lvl > 1) {
                const int upto = out.tau[i][lvl - 2];
                for (int k = 0; k < upto; ++k) {
                    const double d = (path.fields[k].values - prev_level.fields[k].values)
                                         .lpNorm<Eigen::Infinity>();
                    if (d > 1e-10)
                        throw std::runtime_error("local_solve: localization nesting violated at node " +
                                                 std::to_string(k));
                }
            }
            prev_level = path;
            if (lvl == n_levels) out.members[i] = std::move(path);
        }
        // Explosion: stopping levels all hit before T with 1/n-extrapolated limit < T.
        const auto& taus = out.tau[i];
        if (n_levels >= 3 && taus[n_levels - 1] < m) {
            const double tn = ef.tgrid().times[taus[n_levels - 1]];
            const double tn1 = ef.tgrid().times[taus[n_levels - 2]];
            const double est = tn + double(n_levels - 1) * (tn - tn1);
            out.explosion_estimate[i] = est;
            out.exploded[i] = est < ef.tgrid().T && tn >= tn1;
        }
    });
    return out;
}

std::string ContractionReport::to_json() const {
    nlohmann::json j;
    j["p_weight"] = p_weight;
    j["iters"] = iters;
    j["q"] = q;
    j["final_residual"] = final_residual;
    j["reached_half"] = reached_half;
    return j.dump(2);
}

std::string LocalSolution::to_json() const {
    nlohmann::json j;
    j["n_levels"] = n_levels;
    j["tau"] = tau;
    j["exploded"] = std::vector<int>(exploded.begin(), exploded.end());
    j["explosion_estimate"] = explosion_estimate;
    return j.dump(2);
}

} // namespace spde
