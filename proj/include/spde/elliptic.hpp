#pragma once

#include "spde/mesh.hpp"

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <string>
#include <vector>

namespace spde {

/// Time/space-dependent coefficient pair of the divergence-form operator
/// A(t) u = D(a(t,s) D u) + a0(t,s) u with conormal Neumann condition.
struct OperatorFamily {
    std::function<double(double, double)> a;   // (t,s) -> diffusion coefficient
    std::function<double(double, double)> a0;  // (t,s) -> zeroth-order coefficient
    double mu = 1.0;     // advertised time-Hoelder exponent of the coefficients
    double w = 1.0;      // shift making w - A(t) positive
    double kappa = 1.0;  // ellipticity floor (0 disables the degenerate guard)

    static OperatorFamily constant_laplacian(double diff = 1.0, double a0 = 0.0);
    /// a(t,s) = 1 + rate*t, a0 constant.
    static OperatorFamily linear_in_time(double rate, double a0 = 0.0);
    /// a(t,s) = 1 + eps*t*(1 + cos(2 pi s)/2), a0 constant.
    static OperatorFamily perturbed_cosine(double eps, double a0 = 0.0);
    /// Degenerate family A = 0 (pure-drift test problems).
    static OperatorFamily zero();
};

/// Nodal finite-difference realization of A(t) at a fixed time.
struct DiscreteOperator {
    Eigen::MatrixXd matrix;
    double t = 0.0;
    double w = 0.0;
    SpaceGrid grid;
};

/// Eigendecomposition of a DiscreteOperator. In the (weighted) self-adjoint
/// case the eigenvectors are orthonormal in the trapezoidal L^2 inner product.
struct SpectralData {
    bool self_adjoint = false;
    Eigen::VectorXd eigenvalues;          // sorted by real part descending
    Eigen::MatrixXd eigenvectors;         // columns; self-adjoint case
    Eigen::VectorXcd eigenvalues_c;       // non-normal case
    Eigen::MatrixXcd eigenvectors_c;
    double condition = 1.0;               // eigenvector matrix condition estimate
};

/// Probe result for the (AT1)/(AT2) resolvent estimates.
struct ATReport {
    double K_est = 0.0;
    double L_est = 0.0;
    double w_used = 0.0;
    double phi = 0.0;
    double mu = 0.0;
    double nu = 1.0;
    struct Sample {
        double lambda_re, lambda_im, t, s, value;
    };
    std::vector<Sample> samples;
    bool pass = false;
    double refinement_ratio = 0.0;

    std::string to_json() const;
};

/// Conservative second-order stencil with ghost-node Neumann reflection.
/// The nodal matrix is self-adjoint with respect to the trapezoidal weights
/// (W A = A^T W), not entrywise symmetric at the boundary rows.
DiscreteOperator assemble(const OperatorFamily& fam, const SpaceGrid& grid, double t);

/// True when W A = A^T W to 1e-12 relative (discrete L^2 self-adjointness).
bool is_weighted_symmetric(const DiscreteOperator& op, double tol = 1e-12);

SpectralData spectrum(const DiscreteOperator& op);

/// (w - A)^theta via the eigendecomposition, theta of either sign.
DiscreteOperator frac_power(const DiscreteOperator& op, double theta, double w);
DiscreteOperator frac_power(const DiscreteOperator& op, const SpectralData& sd,
                            double theta, double w);

/// Interpolation-scale norm ||(w - A)^eta x||_{L^2}.
double interp_norm(const DiscreteOperator& op, double eta, double w, const Field& x);
double interp_norm(const DiscreteOperator& op, const SpectralData& sd, double eta,
                   double w, const Field& x);

/// Weighted L^2 operator norm ||W^{1/2} M W^{-1/2}||_2.
double op_norm(const Eigen::MatrixXcd& m, const SpaceGrid& grid);
double op_norm(const Eigen::MatrixXd& m, const SpaceGrid& grid);

/// Smallest integer shift w with max Re spectrum(A(t)) <= w - 1 over t_samples.
double choose_shift(const OperatorFamily& fam, const SpaceGrid& grid,
                    const std::vector<double>& t_samples);

/// (AT1) probe: K_est = max ||R(lambda,A(t))|| (1 + |lambda - w|) over samples
/// on the sector rays arg(lambda - w) = +-phi. Runs the same samples on a
/// refined grid for the stability flag.
ATReport at1_probe(const OperatorFamily& fam, const SpaceGrid& grid,
                   const std::vector<double>& t_samples,
                   const std::vector<double>& lambda_moduli, double phi = 3.0 * M_PI / 4.0);

/// (AT2) probe: L_est = max of
/// ||A_w(t) R(lambda,A_w(t)) (A_w(t)^{-1} - A_w(s)^{-1})|| / (|t-s|^mu (|lambda|+1)^{-nu}).
ATReport at2_probe(const OperatorFamily& fam, const SpaceGrid& grid,
                   const std::vector<std::pair<double, double>>& st_pairs,
                   const std::vector<double>& lambda_moduli, double nu = 1.0,
                   double phi = 3.0 * M_PI / 4.0);

} // namespace spde
