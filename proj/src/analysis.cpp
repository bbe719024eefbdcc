#include "spde/analysis.hpp"

#include "spde/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace spde {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    double mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= double(n);
    my /= double(n);
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    return sxy / sxx;
}

} // namespace

HolderEstimate estimate_holder(const std::vector<Path>& ensemble, SpatialNorm norm,
                               const std::vector<int>& lags, std::uint64_t boot_seed,
                               int boot_rounds) {
    if (lags.size() < 4) throw std::domain_error("estimate_holder: need >= 4 dyadic lags");
    if (ensemble.size() < 30) throw std::domain_error("estimate_holder: need ensemble >= 30");
    const int M = int(ensemble.size());
    const double dt = ensemble[0].tgrid.dt;
    const int m = ensemble[0].tgrid.m_steps;

    std::vector<double> slopes(M);
    int degenerate = 0;
    for (int i = 0; i < M; ++i) {
        std::vector<double> lx, ly;
        for (int lag : lags) {
            if (lag >= m) throw std::domain_error("estimate_holder: lag exceeds grid");
            std::vector<double> incs;
            for (int k = 0; k + lag <= m; ++k) {
                Field d = ensemble[i].fields[k + lag] - ensemble[i].fields[k];
                incs.push_back(spatial_norm(d, norm));
            }
            const double med = median(std::move(incs));
            if (med <= 0.0) continue;
            lx.push_back(std::log(lag * dt));
            ly.push_back(std::log(med));
        }
        if (lx.size() < 2) {
            slopes[i] = std::numeric_limits<double>::infinity();
            ++degenerate;
        } else {
            slopes[i] = ols_slope(lx, ly);
        }
    }

    HolderEstimate est;
    if (degenerate == M) {
        est.degenerate = true;
        est.est = est.lo = est.hi = std::numeric_limits<double>::infinity();
        return est;
    }
    std::vector<double> finite;
    for (double s : slopes)
        if (std::isfinite(s)) finite.push_back(s);
    est.est = median(finite);

    // Bootstrap 90% CI of the ensemble median.
    std::vector<double> boots(boot_rounds);
    for (int b = 0; b < boot_rounds; ++b) {
        std::vector<double> re;
        re.reserve(finite.size());
        for (size_t j = 0; j < finite.size(); ++j) {
            const std::uint64_t u = splitmix64(boot_seed ^ splitmix64(std::uint64_t(b) << 32 | j));
            re.push_back(finite[u % finite.size()]);
        }
        boots[b] = median(std::move(re));
    }
    std::sort(boots.begin(), boots.end());
    est.lo = boots[size_t(0.05 * (boot_rounds - 1))];
    est.hi = boots[size_t(std::ceil(0.95 * (boot_rounds - 1)))];
    return est;
}

std::vector<Field> adjoint_test_function(const EvolutionFamily& ef, int t_node,
                                         const Field& xstar) {
    std::vector<Field> phi(t_node + 1, Field::zero(ef.grid()));
    phi[t_node] = xstar;
    for (int k = t_node - 1; k >= 0; --k)
        phi[k] = ef.apply_adjoint_idx((k + 1) * ef.substeps(), k * ef.substeps(), phi[k + 1]);
    return phi;
}

double variational_residual(const Path& U, const WienerPath& W, const EvolutionFamily& ef,
                            const ProblemSpec& ps, int t_node, const Field& xstar,
                            const std::vector<Field>* phi_cached) {
    const double dt = ef.tgrid().dt;
    const Eigen::VectorXd qw = quad_weights(ef.grid());
    auto ip = [&](const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
        return u.dot(qw.asDiagonal() * v);
    };
    std::vector<Field> phi_local;
    const std::vector<Field>* phi = phi_cached;
    if (!phi) {
        phi_local = adjoint_test_function(ef, t_node, xstar);
        phi = &phi_local;
    }

    // Drift part by trapezoidal quadrature of the continuum integrand: this is
    // deliberately not the scheme-consistent rule, so the residual measures the
    // discretization gap instead of telescoping to roundoff.
    auto integrand = [&](int k) {
        const double t = ef.tgrid().times[k];
        // A(t_k)* phi in the trapezoidal inner product: W^{-1} A^T W phi.
        const Eigen::MatrixXd& A = ef.operator_at(k * ef.substeps()).matrix;
        Eigen::VectorXd astar_phi =
            qw.cwiseInverse().asDiagonal() * (A.transpose() * (qw.asDiagonal() * (*phi)[k].values));
        Eigen::VectorXd dphi = (k < t_node ? ((*phi)[k + 1].values - (*phi)[k].values)
                                           : ((*phi)[k].values - (*phi)[k - 1].values)) /
                               dt;
        NemytskiiValue nv = nemytskii(ps, t, U.fields[k]);
        return ip(U.fields[k].values, dphi + astar_phi) + ip(nv.Fu.values, (*phi)[k].values);
    };
    double drift = 0.0, ito = 0.0;
    double h_prev = integrand(0);
    for (int k = 0; k < t_node; ++k) {
        const double h_next = integrand(k + 1);
        drift += 0.5 * dt * (h_prev + h_next);
        h_prev = h_next;
        NemytskiiValue nv = nemytskii(ps, ef.tgrid().times[k], U.fields[k]);
        for (int n = 0; n < int(nv.Bu.size()); ++n)
            ito += W.increments(n, k) * ip(nv.Bu[n].values, (*phi)[k].values);
    }
    return ip(U.fields[t_node].values, (*phi)[t_node].values) -
           ip(ps.u0.values, (*phi)[0].values) - drift - ito;
}

namespace {

OperatorPath additive_operator_path(const ProblemSpec& ps, const TimeGrid& tg) {
    OperatorPath Phi;
    Phi.columns.reserve(tg.m_steps + 1);
    for (int k = 0; k <= tg.m_steps; ++k)
        Phi.columns.push_back(nemytskii(ps, tg.times[k], ps.u0).Bu);
    return Phi;
}

double rms(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s / double(v.size()));
}

} // namespace

RegularityReport run_ensemble(const ScenarioRun& scenario, std::vector<Path>* solution_out) {
    const ScenarioRun& sc = scenario;
    sc.ps.validate();
    auto want = [&](const std::string& id) {
        return std::find(sc.checks.begin(), sc.checks.end(), id) != sc.checks.end();
    };
    for (const auto& id : sc.checks) {
        static const std::vector<std::string> known{"contraction", "holder", "factorization",
                                                    "maxreg", "variational", "sobolev",
                                                    "smoothing", "singular"};
        if (std::find(known.begin(), known.end(), id) == known.end())
            throw std::domain_error("run_ensemble: unknown check id '" + id + "'");
    }

    RegularityReport rep;
    rep.scenario_id = sc.id;
    rep.n_cells = sc.n_cells;
    rep.m_steps = sc.m_steps;
    rep.substeps = sc.substeps;
    rep.T = sc.ps.T;
    rep.seed = sc.cfg.seed;
    rep.ensemble = sc.cfg.ensemble;

    const SpaceGrid grid = SpaceGrid::make(sc.n_cells);
    const TimeGrid tg = TimeGrid::make(sc.ps.T, sc.m_steps);
    EvolutionFamily ef(sc.ps.fam, grid, tg, sc.scheme, sc.substeps);

    const bool need_solve = sc.checks.empty() || want("contraction") || want("holder") ||
                            want("variational") || want("sobolev");
    const bool need_coarse = want("factorization") || want("maxreg") || want("variational") ||
                             want("sobolev");

    EnsembleSolution sol;
    if (need_solve) {
        sol = picard_solve(sc.ps, ef, sc.cfg);
        rep.contraction = sol.report;
        rep.has_solution = true;
        if (want("contraction") || sc.checks.empty()) {
            const double qf = sol.report.q.empty() ? 0.0 : sol.report.q.back();
            rep.constants["contraction"] = qf;
            rep.flags["contraction"] = qf <= 0.9 && sol.report.final_residual < sc.cfg.tol;
        }
    }

    // Coarse companion grids for self-convergence checks (shared Brownian path).
    TimeGrid tg_coarse;
    std::optional<EvolutionFamily> ef_coarse;
    if (need_coarse) {
        if (sc.m_steps % 2 != 0) throw std::domain_error("run_ensemble: m_steps must be even");
        tg_coarse = TimeGrid::make(sc.ps.T, sc.m_steps / 2);
        ef_coarse.emplace(sc.ps.fam, grid, tg_coarse, sc.scheme, sc.substeps);
    }

    if (want("holder")) {
        std::vector<int> lags;
        for (int lag = 1; lag <= sc.m_steps / 8 && int(lags.size()) < 6; lag *= 2)
            lags.push_back(lag);
        rep.time_exponent = estimate_holder(sol.members, SpatialNorm::L2, lags);
        rep.flags["holder"] = !rep.time_exponent.degenerate &&
                              rep.time_exponent.lo > sc.holder_lo &&
                              rep.time_exponent.hi < sc.holder_hi;
    }

    if (want("factorization") || want("maxreg")) {
        const double alpha = 0.2;
        const OperatorPath Phi_f = additive_operator_path(sc.ps, tg);
        const OperatorPath Phi_c = additive_operator_path(sc.ps, tg_coarse);
        std::vector<double> def_f(sc.cfg.ensemble), def_c(sc.cfg.ensemble);
        std::vector<double> mr_f(sc.cfg.ensemble), mr_c(sc.cfg.ensemble);
        parallel_for(sc.cfg.ensemble, sc.cfg.workers, [&](int i) {
            const WienerPath w = sample_member(sc.ps.noise, tg, sc.cfg.seed, i);
            const WienerPath wc = w.coarsen(2);
            if (want("factorization")) {
                def_f[i] = factorization_defect(ef, Phi_f, w, alpha, sc.ps.theta_B);
                def_c[i] = factorization_defect(*ef_coarse, Phi_c, wc, alpha, sc.ps.theta_B);
            }
            if (want("maxreg")) {
                auto conv_f = stoch_convolve(ef, Phi_f, w, sc.ps.theta_B);
                auto conv_c = stoch_convolve(*ef_coarse, Phi_c, wc, sc.ps.theta_B);
                mr_f[i] = max_reg_functional(ef, conv_f, sc.ps.fam.w);
                mr_c[i] = max_reg_functional(*ef_coarse, conv_c, sc.ps.fam.w);
            }
        });
        if (want("factorization")) {
            double mf = 0, mc = 0;
            for (int i = 0; i < sc.cfg.ensemble; ++i) {
                mf += def_f[i];
                mc += def_c[i];
            }
            mf /= sc.cfg.ensemble;
            mc /= sc.cfg.ensemble;
            rep.constants["factorization"] = mf;
            rep.constants["factorization_ratio"] = mf > 0 ? mc / mf : 1.0;
            rep.flags["factorization"] = mf == 0.0 || mc / mf >= 1.3;
        }
        if (want("maxreg")) {
            double lf = 0, lc = 0;
            for (int i = 0; i < sc.cfg.ensemble; ++i) {
                lf += mr_f[i];
                lc += mr_c[i];
            }
            const double rf = (lf / sc.cfg.ensemble) / hs_l2_functional(Phi_f, tg);
            const double rc = (lc / sc.cfg.ensemble) / hs_l2_functional(Phi_c, tg_coarse);
            rep.constants["maxreg"] = rf;
            rep.constants["maxreg_ratio_change"] = std::abs(rf / rc - 1.0);
            rep.flags["maxreg"] = std::abs(rf / rc - 1.0) < 0.25;
        }
    }

    if (want("variational")) {
        // Terminal-time eigenmode test function, residual RMS at two dt levels.
        const SpectralData& sdT = ef.spectral_at(ef.sub_nodes() - 1);
        Field xstar = Field::zero(grid);
        if (sdT.self_adjoint)
            xstar.values = sdT.eigenvectors.col(std::min<int>(1, sc.n_cells));
        else
            xstar.values = Eigen::VectorXd::Ones(sc.n_cells + 1);
        const auto phi_f = adjoint_test_function(ef, sc.m_steps, xstar);
        const auto phi_c = adjoint_test_function(*ef_coarse, sc.m_steps / 2, xstar);
        std::vector<WienerPath> wc;
        for (int i = 0; i < sc.cfg.ensemble; ++i) wc.push_back(sol.wiener[i].coarsen(2));
        EnsembleSolution sol_c = picard_solve(sc.ps, *ef_coarse, sc.cfg, wc);
        std::vector<double> res_f(sc.cfg.ensemble), res_c(sc.cfg.ensemble);
        parallel_for(sc.cfg.ensemble, sc.cfg.workers, [&](int i) {
            res_f[i] = variational_residual(sol.members[i], sol.wiener[i], ef, sc.ps, sc.m_steps,
                                            xstar, &phi_f);
            res_c[i] = variational_residual(sol_c.members[i], sol_c.wiener[i], *ef_coarse, sc.ps,
                                            sc.m_steps / 2, xstar, &phi_c);
        });
        const double rf = rms(res_f), rc = rms(res_c);
        const double order = rf > 0 ? std::log2(rc / rf) : 1.0;
        rep.constants["variational"] = rf;
        rep.constants["variational_order"] = order;
        rep.flags["variational"] = order >= 0.4 || rf < 1e-12;
    }

    if (want("sobolev")) {
        std::vector<WienerPath> wc;
        for (int i = 0; i < sc.cfg.ensemble; ++i) wc.push_back(sol.wiener[i].coarsen(2));
        EnsembleSolution sol_c = picard_solve(sc.ps, *ef_coarse, sc.cfg, wc);
        auto sob2 = [](const std::vector<Path>& members, const TimeGrid& g) {
            double acc = 0.0;
            for (const auto& p : members)
                for (int k = 0; k <= g.m_steps; ++k) {
                    const double s = sobolev1_norm(p.fields[k]);
                    acc += ((k == 0 || k == g.m_steps) ? 0.5 : 1.0) * g.dt * s * s;
                }
            return acc / double(members.size());
        };
        const double sf = sob2(sol.members, tg), scs = sob2(sol_c.members, tg_coarse);
        rep.constants["sobolev"] = sf;
        rep.constants["sobolev_ratio"] = scs > 0 ? sf / scs : 1.0;
        rep.flags["sobolev"] = std::isfinite(sf) && sf / scs < 2.0 && scs / sf < 2.0;
    }

    if (want("smoothing") || want("singular")) {
        std::vector<EvolutionFamily::SampleTriple> samples;
        const SpectralData& sd0 = ef.spectral_at(0);
        for (int mode : {1, 2, 3}) {
            Field x = Field::zero(grid);
            x.values = sd0.eigenvectors.col(std::min(mode, sc.n_cells));
            for (double frac : {0.25, 0.5}) {
                EvolutionFamily::SampleTriple smp{frac * sc.ps.T, sc.ps.T, x};
                samples.push_back(smp);
            }
        }
        if (want("smoothing")) {
            auto mcs = ef.smoothing_constant(0.5, 0.0, samples);
            rep.constants["smoothing"] = mcs.C;
            rep.flags["smoothing"] = std::isfinite(mcs.C);
        }
        if (want("singular")) {
            auto mcg = ef.singular_bound(std::min(0.25, 0.5 * sc.ps.fam.mu), samples);
            rep.constants["singular"] = mcg.C;
            rep.flags["singular"] = std::isfinite(mcg.C);
        }
    }

    if (solution_out) *solution_out = std::move(sol.members);
    return rep;
}

bool RegularityReport::all_pass() const {
    for (const auto& [k, v] : flags)
        if (!v) return false;
    return true;
}

std::string RegularityReport::to_json() const {
    nlohmann::json j;
    j["scenario_id"] = scenario_id;
    j["grids"] = {{"n_cells", n_cells}, {"m_steps", m_steps}, {"substeps", substeps}, {"T", T}};
    j["seeds"] = {{"seed", seed}, {"ensemble", ensemble}};
    if (std::isfinite(time_exponent.est) && time_exponent.est != 0.0)
        j["exponents"]["time"] = {{"est", time_exponent.est},
                                  {"lo", time_exponent.lo},
                                  {"hi", time_exponent.hi}};
    else
        j["exponents"] = nlohmann::json::object();
    j["constants"] = constants;
    j["flags"] = flags;
    j["contraction"] = {{"p_weight", contraction.p_weight},
                        {"iters", contraction.iters},
                        {"q", contraction.q},
                        {"final_residual", contraction.final_residual}};
    j["versions"] = {{"report_schema", 1}, {"generator", "spde-toolkit"}};
    return j.dump(2);
}

} // namespace spde
