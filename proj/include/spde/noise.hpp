#pragma once

#include "spde/mesh.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace spde {

enum class CovarianceRegime { Linf, Lq };

/// Spectral covariance of the Q-Wiener process: W(t,s) = sum sqrt(lambda_n) W_n(t) e_n(s).
struct NoiseModel {
    Eigen::VectorXd lambdas;    // nonincreasing, >= 0
    std::vector<Field> modes;   // orthonormal in discrete L^2
    CovarianceRegime regime = CovarianceRegime::Linf;
    double gamma = 0.0;
    double q = 0.0;
    double beta = 0.0;

    int n_modes() const { return int(modes.size()); }
    /// Truncation tail of the covariance trace is not representable here;
    /// the analytic tail sum_{n>N} n^{-gamma} for the cosine family.
    double trace_tail() const;

    std::string to_json() const;
};

struct CondCheck {
    double sum = 0.0;
    bool pass = false;
};

/// Cosine family e_n(s) = sqrt(2) cos(n pi s), lambda_n = n^{-gamma}.
/// Requires N <= n_cells - 1 so discrete orthonormality is exact.
NoiseModel make_model(double gamma, int N, const SpaceGrid& grid);

/// Single flat mode e_1 = 1 with weight lambda (test helper; orthonormal).
NoiseModel make_flat_mode(const SpaceGrid& grid, double lambda = 1.0);

/// sum lambda_n ||e_n||_inf^2; pass iff the last-quartile tail is < 1% of the total.
CondCheck check_cond_linfty(const NoiseModel& m);

/// sum lambda_n ||e_n||_q^2 with the constraint q > 1/(1-2 beta), beta in (0,1/2).
CondCheck check_cond_lq(const NoiseModel& m, double q, double beta);

/// Independent N(0,dt) increments per (mode, step) from a counter-based
/// generator keyed (seed, mode, step); reproducible and order-independent.
struct WienerPath {
    Eigen::MatrixXd increments;  // n_modes x m_steps
    std::uint64_t seed = 0;
    std::string generator_id = "splitmix-boxmuller-v1";

    /// Scalar path W_n(t_k) = sum of increments up to k.
    double cumulative(int mode, int k) const;
    /// Aggregate increments by `factor` for a coarser grid sharing the
    /// same underlying Brownian path (common random numbers).
    WienerPath coarsen(int factor) const;
};

/// Counter-based standard normal keyed by (seed, stream, counter).
double counter_gauss(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

WienerPath sample(const NoiseModel& m, const TimeGrid& tg, std::uint64_t seed);

/// Hilbert-Schmidt norm of the operator with columns g_n, plus the
/// dominating function g(s) = (sum_n g_n(s)^2)^{1/2}.
struct HsResult {
    double hs = 0.0;
    Field dominating;
};
HsResult hs_norm(const std::vector<Field>& columns);

/// Mode-major CSV of the increments, for audit.
void write_csv(std::ostream& os, const WienerPath& w);

} // namespace spde
