#include "spde/elliptic.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

namespace spde {

OperatorFamily OperatorFamily::constant_laplacian(double diff, double a0v) {
    OperatorFamily f;
    f.a = [diff](double, double) { return diff; };
    f.a0 = [a0v](double, double) { return a0v; };
    f.mu = 1.0;
    f.kappa = diff > 0 ? diff : 0.0;
    return f;
}

OperatorFamily OperatorFamily::linear_in_time(double rate, double a0v) {
    OperatorFamily f;
    f.a = [rate](double t, double) { return 1.0 + rate * t; };
    f.a0 = [a0v](double, double) { return a0v; };
    f.mu = 1.0;
    f.kappa = 1.0;
    return f;
}

OperatorFamily OperatorFamily::perturbed_cosine(double eps, double a0v) {
    OperatorFamily f;
    f.a = [eps](double t, double s) { return 1.0 + eps * t * (1.0 + 0.5 * std::cos(2.0 * M_PI * s)); };
    f.a0 = [a0v](double, double) { return a0v; };
    f.mu = 1.0;
    f.kappa = 1.0;
    return f;
}

OperatorFamily OperatorFamily::zero() {
    OperatorFamily f;
    f.a = [](double, double) { return 0.0; };
    f.a0 = [](double, double) { return 0.0; };
    f.mu = 1.0;
    f.kappa = 0.0;
    f.w = 1.0;
    return f;
}

DiscreteOperator assemble(const OperatorFamily& fam, const SpaceGrid& grid, double t) {
    const int n = grid.n_cells;
    const double h = grid.h;
    for (int i = 0; i <= n; ++i) {
        if (fam.a(t, grid.nodes[i]) < fam.kappa - 1e-14)
            throw std::runtime_error("assemble: ellipticity violated at node " + std::to_string(i) +
                                     " (t=" + std::to_string(t) + ", see (unifell))");
    }
    DiscreteOperator op;
    op.t = t;
    op.w = fam.w;
    op.grid = grid;
    Eigen::MatrixXd& A = op.matrix;
    A = Eigen::MatrixXd::Zero(n + 1, n + 1);
    auto amid = [&](int i) { return fam.a(t, 0.5 * (grid.nodes[i] + grid.nodes[i + 1])); };
    for (int i = 1; i < n; ++i) {
        const double ap = amid(i), am = amid(i - 1);
        A(i, i - 1) = am / (h * h);
        A(i, i) = -(ap + am) / (h * h) + fam.a0(t, grid.nodes[i]);
        A(i, i + 1) = ap / (h * h);
    }
    // Ghost reflection at the ends: zero conormal flux, second-order accurate.
    A(0, 0) = -2.0 * amid(0) / (h * h) + fam.a0(t, grid.nodes[0]);
    A(0, 1) = 2.0 * amid(0) / (h * h);
    A(n, n - 1) = 2.0 * amid(n - 1) / (h * h);
    A(n, n) = -2.0 * amid(n - 1) / (h * h) + fam.a0(t, grid.nodes[n]);
    return op;
}

bool is_weighted_symmetric(const DiscreteOperator& op, double tol) {
    const Eigen::VectorXd w = quad_weights(op.grid);
    const Eigen::MatrixXd wa = w.asDiagonal() * op.matrix;
    const double scale = wa.norm();
    if (scale == 0.0) return true;
    return (wa - wa.transpose()).norm() <= tol * scale;
}

SpectralData spectrum(const DiscreteOperator& op) {
    if (!op.matrix.allFinite()) throw std::domain_error("spectrum: matrix not finite");
    SpectralData sd;
    const int n1 = int(op.matrix.rows());
    const Eigen::VectorXd w = quad_weights(op.grid);
    if (is_weighted_symmetric(op)) {
        sd.self_adjoint = true;
        const Eigen::VectorXd d = w.array().sqrt();
        Eigen::MatrixXd S = d.asDiagonal() * op.matrix * d.cwiseInverse().asDiagonal();
        S = 0.5 * (S + S.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
        // SelfAdjointEigenSolver sorts ascending; flip to descending real part.
        sd.eigenvalues.resize(n1);
        sd.eigenvectors.resize(n1, n1);
        for (int k = 0; k < n1; ++k) {
            sd.eigenvalues[k] = es.eigenvalues()[n1 - 1 - k];
            sd.eigenvectors.col(k) = d.cwiseInverse().asDiagonal() * es.eigenvectors().col(n1 - 1 - k);
        }
        sd.condition = 1.0;
    } else {
        Eigen::EigenSolver<Eigen::MatrixXd> es(op.matrix);
        Eigen::VectorXcd vals = es.eigenvalues();
        Eigen::MatrixXcd vecs = es.eigenvectors();
        std::vector<int> idx(n1);
        for (int k = 0; k < n1; ++k) idx[k] = k;
        std::sort(idx.begin(), idx.end(),
                  [&](int a, int b) { return vals[a].real() > vals[b].real(); });
        sd.eigenvalues_c.resize(n1);
        sd.eigenvectors_c.resize(n1, n1);
        for (int k = 0; k < n1; ++k) {
            sd.eigenvalues_c[k] = vals[idx[k]];
            sd.eigenvectors_c.col(k) = vecs.col(idx[k]);
        }
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(sd.eigenvectors_c);
        sd.condition = svd.singularValues()(0) / svd.singularValues()(n1 - 1);
        if (sd.condition > 1e8)
            throw std::runtime_error("spectrum: eigenvector matrix ill-conditioned (non-normal)");
    }
    return sd;
}

namespace {

Eigen::MatrixXd spectral_function(const DiscreteOperator& op, const SpectralData& sd,
                                  const std::function<double(double)>& fn) {
    const Eigen::VectorXd w = quad_weights(op.grid);
    const int n1 = int(op.matrix.rows());
    if (sd.self_adjoint) {
        Eigen::VectorXd fvals(n1);
        for (int k = 0; k < n1; ++k) fvals[k] = fn(sd.eigenvalues[k]);
        // V^{-1} = V^T W since the columns are W-orthonormal.
        return sd.eigenvectors * fvals.asDiagonal() * sd.eigenvectors.transpose() * w.asDiagonal();
    }
    Eigen::VectorXcd fvals(n1);
    for (int k = 0; k < n1; ++k) fvals[k] = fn(sd.eigenvalues_c[k].real());
    Eigen::MatrixXcd m = sd.eigenvectors_c * fvals.asDiagonal() *
                         sd.eigenvectors_c.inverse();
    return m.real();
}

} // namespace

DiscreteOperator frac_power(const DiscreteOperator& op, const SpectralData& sd,
                            double theta, double w) {
    double max_re = sd.self_adjoint ? sd.eigenvalues[0] : sd.eigenvalues_c[0].real();
    if (!(w - max_re > 0.0))
        throw std::domain_error("frac_power: spectrum not strictly left of shift w");
    DiscreteOperator out;
    out.t = op.t;
    out.w = w;
    out.grid = op.grid;
    out.matrix = spectral_function(op, sd, [theta, w](double lam) { return std::pow(w - lam, theta); });
    return out;
}

DiscreteOperator frac_power(const DiscreteOperator& op, double theta, double w) {
    return frac_power(op, spectrum(op), theta, w);
}

double interp_norm(const DiscreteOperator& op, const SpectralData& sd, double eta,
                   double w, const Field& x) {
    const Eigen::VectorXd qw = quad_weights(op.grid);
    if (sd.self_adjoint) {
        double max_re = sd.eigenvalues[0];
        if (!(w - max_re > 0.0))
            throw std::domain_error("interp_norm: spectrum not strictly left of shift w");
        // c_k = <x, v_k>_W; norm^2 = sum (w - lambda_k)^{2 eta} c_k^2.
        Eigen::VectorXd c = sd.eigenvectors.transpose() * (qw.asDiagonal() * x.values);
        double s = 0.0;
        for (int k = 0; k < c.size(); ++k)
            s += std::pow(w - sd.eigenvalues[k], 2.0 * eta) * c[k] * c[k];
        return std::sqrt(s);
    }
    DiscreteOperator pw = frac_power(op, sd, eta, w);
    Field y = x;
    y.values = pw.matrix * x.values;
    return lp_norm(y, 2.0);
}

double interp_norm(const DiscreteOperator& op, double eta, double w, const Field& x) {
    return interp_norm(op, spectrum(op), eta, w, x);
}

double op_norm(const Eigen::MatrixXcd& m, const SpaceGrid& grid) {
    const Eigen::VectorXd w = quad_weights(grid);
    const Eigen::VectorXd d = w.array().sqrt();
    Eigen::MatrixXcd s = d.asDiagonal() * m * d.cwiseInverse().asDiagonal();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(s);
    return svd.singularValues()(0);
}

double op_norm(const Eigen::MatrixXd& m, const SpaceGrid& grid) {
    return op_norm(Eigen::MatrixXcd(m.cast<std::complex<double>>()), grid);
}

double choose_shift(const OperatorFamily& fam, const SpaceGrid& grid,
                    const std::vector<double>& t_samples) {
    double max_re = -std::numeric_limits<double>::infinity();
    for (double t : t_samples) {
        SpectralData sd = spectrum(assemble(fam, grid, t));
        max_re = std::max(max_re, sd.self_adjoint ? sd.eigenvalues[0] : sd.eigenvalues_c[0].real());
    }
    return std::ceil(max_re + 1.0);
}

namespace {

using Cplx = std::complex<double>;

/// max over sector-ray samples of ||R(lambda,A(t))|| (1 + |lambda - w|).
double at1_scan(const OperatorFamily& fam, const SpaceGrid& grid,
                const std::vector<double>& t_samples, const std::vector<double>& moduli,
                double phi, double w, std::vector<ATReport::Sample>* samples) {
    const int n1 = grid.n_cells + 1;
    double K = 0.0;
    for (double t : t_samples) {
        const Eigen::MatrixXcd A = assemble(fam, grid, t).matrix.cast<Cplx>();
        for (double rho : moduli) {
            for (int sgn : {+1, -1}) {
                const Cplx lam = w + rho * std::exp(Cplx(0.0, sgn * phi));
                Eigen::MatrixXcd M = lam * Eigen::MatrixXcd::Identity(n1, n1) - A;
                Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
                Eigen::MatrixXcd R = lu.solve(Eigen::MatrixXcd::Identity(n1, n1));
                if (!R.allFinite())
                    throw std::runtime_error("at1_probe: singular resolvent at lambda=(" +
                                             std::to_string(lam.real()) + "," +
                                             std::to_string(lam.imag()) + "), t=" + std::to_string(t));
                const double val = op_norm(R, grid) * (1.0 + std::abs(lam - Cplx(w)));
                K = std::max(K, val);
                if (samples && sgn > 0)
                    samples->push_back({lam.real(), lam.imag(), t, t, val});
            }
        }
    }
    return K;
}

double at2_scan(const OperatorFamily& fam, const SpaceGrid& grid,
                const std::vector<std::pair<double, double>>& st_pairs,
                const std::vector<double>& moduli, double phi, double w,
                double mu, double nu, std::vector<ATReport::Sample>* samples) {
    const int n1 = grid.n_cells + 1;
    const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(n1, n1);
    double L = 0.0;
    for (auto [s, t] : st_pairs) {
        if (s == t) throw std::domain_error("at2_probe: need s != t");
        const Eigen::MatrixXcd Awt = assemble(fam, grid, t).matrix.cast<Cplx>() - w * I;
        const Eigen::MatrixXcd Aws = assemble(fam, grid, s).matrix.cast<Cplx>() - w * I;
        const Eigen::MatrixXcd invt = Awt.partialPivLu().solve(I);
        const Eigen::MatrixXcd invs = Aws.partialPivLu().solve(I);
        for (double rho : moduli) {
            for (int sgn : {+1, -1}) {
                const Cplx lam = rho * std::exp(Cplx(0.0, sgn * phi));
                Eigen::PartialPivLU<Eigen::MatrixXcd> lu(lam * I - Awt);
                Eigen::MatrixXcd M = Awt * lu.solve(invt - invs);
                if (!M.allFinite())
                    throw std::runtime_error("at2_probe: singular resolvent at t=" + std::to_string(t));
                const double denom = std::pow(std::abs(t - s), mu) * std::pow(std::abs(lam) + 1.0, -nu);
                const double val = op_norm(M, grid) / denom;
                L = std::max(L, val);
                if (samples && sgn > 0)
                    samples->push_back({lam.real(), lam.imag(), t, s, val});
            }
        }
    }
    return L;
}

} // namespace

ATReport at1_probe(const OperatorFamily& fam, const SpaceGrid& grid,
                   const std::vector<double>& t_samples,
                   const std::vector<double>& lambda_moduli, double phi) {
    if (!(phi > M_PI / 2 && phi <= M_PI)) throw std::domain_error("at1_probe: phi in (pi/2, pi]");
    ATReport rep;
    rep.phi = phi;
    rep.mu = fam.mu;
    rep.w_used = fam.w;
    rep.K_est = at1_scan(fam, grid, t_samples, lambda_moduli, phi, fam.w, &rep.samples);
    const SpaceGrid fine = SpaceGrid::make(2 * grid.n_cells);
    const double K_fine = at1_scan(fam, fine, t_samples, lambda_moduli, phi, fam.w, nullptr);
    rep.refinement_ratio = K_fine / std::max(rep.K_est, 1e-300);
    rep.pass = std::isfinite(rep.K_est) && std::isfinite(K_fine) &&
               rep.refinement_ratio < 2.0 && rep.refinement_ratio > 0.5;
    return rep;
}

ATReport at2_probe(const OperatorFamily& fam, const SpaceGrid& grid,
                   const std::vector<std::pair<double, double>>& st_pairs,
                   const std::vector<double>& lambda_moduli, double nu, double phi) {
    ATReport rep;
    rep.phi = phi;
    rep.mu = fam.mu;
    rep.nu = nu;
    rep.w_used = fam.w;
    rep.L_est = at2_scan(fam, grid, st_pairs, lambda_moduli, phi, fam.w, fam.mu, nu, &rep.samples);
    const SpaceGrid fine = SpaceGrid::make(2 * grid.n_cells);
    const double L_fine = at2_scan(fam, fine, st_pairs, lambda_moduli, phi, fam.w, fam.mu, nu, nullptr);
    if (rep.L_est < 1e-12 && L_fine < 1e-12) {
        rep.refinement_ratio = 1.0;
        rep.pass = true;
    } else {
        rep.refinement_ratio = L_fine / std::max(rep.L_est, 1e-300);
        rep.pass = std::isfinite(rep.L_est) && std::isfinite(L_fine) &&
                   rep.refinement_ratio < 2.0 && rep.refinement_ratio > 0.5;
    }
    return rep;
}

std::string ATReport::to_json() const {
    nlohmann::json j;
    j["K_est"] = K_est;
    j["L_est"] = L_est;
    j["mu"] = mu;
    j["nu"] = nu;
    j["w"] = w_used;
    j["phi"] = phi;
    j["refinement_ratio"] = refinement_ratio;
    j["pass"] = pass;
    j["samples"] = nlohmann::json::array();
    for (const auto& s : samples)
        j["samples"].push_back({{"lambda_re", s.lambda_re},
                                {"lambda_im", s.lambda_im},
                                {"t", s.t},
                                {"s", s.s},
                                {"value", s.value}});
    return j.dump(2);
}

} // namespace spde
