#include "spde/convolution.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace spde {

namespace {

/// Integrand value at node k: (w-A(t_k))^{theta} sum_n Phi[k][n] dW(n,k).
Eigen::VectorXd ito_cell_value(const EvolutionFamily& ef, const OperatorPath& Phi,
                               const WienerPath& W, double theta, int k) {
    const auto& cols = Phi.columns[k];
    Eigen::VectorXd v = Eigen::VectorXd::Zero(ef.grid().n_cells + 1);
    for (size_t n = 0; n < cols.size(); ++n) v += W.increments(int(n), k) * cols[n].values;
    if (theta != 0.0) {
        Field f;
        f.grid = ef.grid();
        f.values = v;
        v = ef.frac_power_apply(k * ef.substeps(), theta, f).values;
    }
    return v;
}

/// result(t_l) = sum_{k<l} weight(l,k) P(t_l, t_k) xi_k, by batched in-flight
/// propagation of the integrand cells (everything frozen at cell left
/// endpoints, matching the Ito construction).
Path propagated_weighted_sum(const EvolutionFamily& ef,
                             const std::function<Eigen::VectorXd(int)>& xi,
                             const std::function<double(int, int)>& weight) {
    const int m = ef.tgrid().m_steps;
    const int n1 = ef.grid().n_cells + 1;
    Path out = Path::zero(ef.grid(), ef.tgrid());
    Eigen::MatrixXd inflight(n1, m);
    for (int l = 1; l <= m; ++l) {
        inflight.col(l - 1) = xi(l - 1);
        // Advance all live cells from t_{l-1} to t_l (substeps implicit solves).
        for (int j = (l - 1) * ef.substeps(); j < l * ef.substeps(); ++j) {
            Field tmp;
            tmp.grid = ef.grid();
            for (int c = 0; c < l; ++c) {
                tmp.values = inflight.col(c);
                inflight.col(c) = ef.apply_idx(j + 1, j, tmp).values;
            }
        }
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(n1);
        for (int k = 0; k < l; ++k) acc += weight(l, k) * inflight.col(k);
        out.fields[l].values = acc;
    }
    return out;
}

} // namespace

ConvolutionResult det_convolve(const EvolutionFamily& ef, const Path& phi, double theta_F) {
    if (theta_F < 0.0 || theta_F >= 1.0) throw std::domain_error("det_convolve: theta_F in [0,1)");
    const int m = ef.tgrid().m_steps;
    const double dt = ef.tgrid().dt;
    ConvolutionResult res;
    res.method = ConvMethod::Direct;
    res.path = Path::zero(ef.grid(), ef.tgrid());
    Field acc = Field::zero(ef.grid());
    for (int l = 0; l < m; ++l) {
        Field cell = theta_F == 0.0 ? phi.fields[l]
                                    : ef.frac_power_apply(l * ef.substeps(), theta_F, phi.fields[l]);
        acc.values += dt * cell.values;
        acc = ef.apply_idx((l + 1) * ef.substeps(), l * ef.substeps(), acc);
        res.path.fields[l + 1] = acc;
    }
    return res;
}

ConvolutionResult stoch_convolve(const EvolutionFamily& ef, const OperatorPath& Phi,
                                 const WienerPath& W, double theta_B, ItoEndpoint endpoint) {
    if (!Phi.adapted) throw std::runtime_error("stoch_convolve: integrand flagged non-adapted");
    if (theta_B < 0.0 || theta_B >= 0.5)
        throw std::domain_error("stoch_convolve: theta_B in [0, 1/2)");
    const int m = ef.tgrid().m_steps;
    ConvolutionResult res;
    res.method = ConvMethod::Direct;
    res.path = Path::zero(ef.grid(), ef.tgrid());
    Field acc = Field::zero(ef.grid());
    for (int l = 0; l < m; ++l) {
        const Eigen::VectorXd xi = ito_cell_value(ef, Phi, W, theta_B, l);
        if (endpoint == ItoEndpoint::Left) {
            acc.values += xi;
            acc = ef.apply_idx((l + 1) * ef.substeps(), l * ef.substeps(), acc);
        } else {
            acc = ef.apply_idx((l + 1) * ef.substeps(), l * ef.substeps(), acc);
            acc.values += xi;
        }
        res.path.fields[l + 1] = acc;
    }
    return res;
}

Path zeta_alpha(const EvolutionFamily& ef, const OperatorPath& Phi, const WienerPath& W,
                double alpha, double theta_B) {
    if (!(alpha > 0.0 && alpha < 0.5 - theta_B))
        throw std::domain_error("zeta_alpha: alpha in (0, 1/2 - theta_B)");
    if (!Phi.adapted) throw std::runtime_error("zeta_alpha: integrand flagged non-adapted");
    const double c = 1.0 / std::tgamma(1.0 - alpha);
    const auto& times = ef.tgrid().times;
    return propagated_weighted_sum(
        ef, [&](int k) { return ito_cell_value(ef, Phi, W, theta_B, k); },
        [&](int l, int k) { return c * std::pow(times[l] - times[k], -alpha); });
}

Path r_alpha(const EvolutionFamily& ef, const Path& f, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::domain_error("r_alpha: alpha in (0,1]");
    const double c = 1.0 / std::tgamma(alpha);
    const auto& times = ef.tgrid().times;
    // Product rectangle rule: exact kernel mass per cell, integrand and
    // evolution frozen at the cell left endpoint.
    return propagated_weighted_sum(
        ef, [&](int k) { return f.fields[k].values; },
        [&](int l, int k) {
            const double wlk =
                (std::pow(times[l] - times[k], alpha) - std::pow(times[l] - times[k + 1], alpha)) /
                alpha;
            return c * wlk;
        });
}

double factorization_defect(const EvolutionFamily& ef, const OperatorPath& Phi,
                            const WienerPath& W, double alpha, double theta_B) {
    const ConvolutionResult direct = stoch_convolve(ef, Phi, W, theta_B);
    const Path zeta = zeta_alpha(ef, Phi, W, alpha, theta_B);
    const Path recon = r_alpha(ef, zeta, alpha);
    double diff = 0.0, norm = 0.0;
    for (size_t k = 0; k < direct.path.fields.size(); ++k) {
        Field d = direct.path.fields[k] - recon.fields[k];
        diff = std::max(diff, lp_norm(d, 2.0));
        norm = std::max(norm, lp_norm(direct.path.fields[k], 2.0));
    }
    if (norm == 0.0) return 0.0;
    return diff / norm;
}

double max_reg_functional(const EvolutionFamily& ef, const ConvolutionResult& conv, double w) {
    const int m = ef.tgrid().m_steps;
    const double dt = ef.tgrid().dt;
    double acc = 0.0;
    for (int l = 0; l <= m; ++l) {
        const int j = l * ef.substeps();
        const double nrm =
            interp_norm(ef.operator_at(j), ef.spectral_at(j), 0.5, w, conv.path.fields[l]);
        const double tw = (l == 0 || l == m) ? 0.5 * dt : dt;
        acc += tw * nrm * nrm;
    }
    return acc;
}

double hs_l2_functional(const OperatorPath& Phi, const TimeGrid& tg) {
    double acc = 0.0;
    for (int k = 0; k < tg.m_steps; ++k) {
        const double h = hs_norm(Phi.columns[k]).hs;
        acc += tg.dt * h * h;
    }
    return acc;
}

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

} // namespace

double square_function_integral(const DiscreteOperator& op, const Field& x, double tol) {
    const SpectralData sd = spectrum(op);
    if (!sd.self_adjoint)
        throw std::domain_error("square_function_integral: operator must be self-adjoint");
    if (sd.eigenvalues[0] > 1e-10)
        throw std::domain_error("square_function_integral: operator must be negative semi-definite");
    const Eigen::VectorXd qw = quad_weights(op.grid);
    const Eigen::VectorXd c = sd.eigenvectors.transpose() * (qw.asDiagonal() * x.values);
    const int n1 = int(c.size());
    std::vector<std::pair<double, double>> terms;  // (lambda, c^2)
    double slowest = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < n1; ++k) {
        const double lam = sd.eigenvalues[k];
        if (lam < -1e-12 && c[k] * c[k] > 0.0) {
            terms.push_back({lam, c[k] * c[k]});
            slowest = std::max(slowest, lam);
        }
    }
    if (terms.empty()) return 0.0;
    auto g = [&](double t) {
        double s = 0.0;
        for (auto [lam, c2] : terms) s += c2 * (-lam) * std::exp(2.0 * lam * t);
        return s;
    };
    // Horizon with analytically bounded tail: int_T^inf = sum c^2 e^{2 lam T}/2.
    double T = 1.0;
    auto tail = [&](double Th) {
        double s = 0.0;
        for (auto [lam, c2] : terms) s += 0.5 * c2 * std::exp(2.0 * lam * Th);
        return s;
    };
    while (tail(T) > 0.25 * tol) T *= 2.0;
    const double fa = g(0.0), fb = g(T), fm = g(0.5 * T);
    const double whole = T / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(g, 0.0, T, fa, fm, fb, whole, 0.5 * tol, 40) + tail(T);
}

} // namespace spde
