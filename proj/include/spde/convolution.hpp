#pragma once

#include "spde/evolution.hpp"
#include "spde/noise.hpp"

#include <vector>

namespace spde {

/// Time-indexed operator from mode space to field space: N columns per
/// solution-grid node (column n at node k is Phi(t_k) applied to mode n).
struct OperatorPath {
    std::vector<std::vector<Field>> columns;  // [time node][mode]
    bool adapted = true;
};

enum class ConvMethod { Direct, Factorized };
enum class ItoEndpoint { Left, Right };

struct ConvolutionResult {
    Path path;
    ConvMethod method = ConvMethod::Direct;
    double alpha = 0.0;
};

/// Left-rectangle quadrature of int_0^t P(t,s) (w-A(s))^{theta_F} phi(s) ds.
/// The input is supplied in extrapolated form: phi = (w-A)^{-theta_F} of the
/// actual integrand, and the module applies the positive power.
ConvolutionResult det_convolve(const EvolutionFamily& ef, const Path& phi, double theta_F = 0.0);

/// Left-point Ito sum of int_0^t P(t,s) (w-A(s))^{theta_B} Phi(s) dW(s).
ConvolutionResult stoch_convolve(const EvolutionFamily& ef, const OperatorPath& Phi,
                                 const WienerPath& W, double theta_B = 0.0,
                                 ItoEndpoint endpoint = ItoEndpoint::Left);

/// zeta_alpha(t) = Gamma(1-alpha)^{-1} int_0^t (t-s)^{-alpha} P(t,s) Phi(s) dW(s),
/// left-endpoint rule excluding s = t.
Path zeta_alpha(const EvolutionFamily& ef, const OperatorPath& Phi, const WienerPath& W,
                double alpha, double theta_B = 0.0);

/// (R_alpha f)(t) = Gamma(alpha)^{-1} int_0^t (t-s)^{alpha-1} P(t,s) f(s) ds,
/// product rectangle rule: exact per-cell kernel weights, integrand and
/// evolution frozen at the cell left endpoint.
Path r_alpha(const EvolutionFamily& ef, const Path& f, double alpha);

/// Max over nodes of ||stoch_convolve - r_alpha(zeta_alpha)||_2, relative to
/// the max path norm; the same Wiener path feeds both sides.
double factorization_defect(const EvolutionFamily& ef, const OperatorPath& Phi,
                            const WienerPath& W, double alpha, double theta_B = 0.0);

/// Trapezoidal time-quadrature of ||(w-A(t))^{1/2} conv(t)||_2^2.
double max_reg_functional(const EvolutionFamily& ef, const ConvolutionResult& conv, double w);

/// Companion right side: left-rectangle quadrature of ||Phi(t)||_HS^2 on [0,T).
double hs_l2_functional(const OperatorPath& Phi, const TimeGrid& tg);

/// Adaptive quadrature of int_0^inf ||(-A)^{1/2} e^{tA} x||_2^2 dt for a
/// negative semi-definite self-adjoint operator, spectral semigroup; kernel
/// modes contribute zero. Reference value is ||x_perp||^2 / 2.
double square_function_integral(const DiscreteOperator& op, const Field& x, double tol = 1e-9);

} // namespace spde
