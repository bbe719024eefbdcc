#pragma once

#include "spde/convolution.hpp"
#include "spde/evolution.hpp"
#include "spde/noise.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace spde {

/// Semilinear problem data: dU = (A(t)U + F(t,U)) dt + B(t,U) dW.
/// F and B are Nemytskii lifts of the scalar functions f and g.
struct ProblemSpec {
    OperatorFamily fam;
    NoiseModel noise;
    std::function<double(double, double, double)> f;  // (t,s,u)
    std::function<double(double, double, double)> g;
    bool lipschitz_global = true;
    double L_f = 0.0, L_g = 0.0, C_f = 0.0, C_g = 0.0;
    Field u0;
    double theta_F = 0.0, theta_B = 0.0, a = 0.0;
    double T = 1.0;

    /// Throws naming the violated hypothesis tag ((H2)/(H3)).
    void validate() const;
};

struct PicardConfig {
    double r = 4.0;          // moment exponent
    double p_weight = 0.0;   // exponential weight; escalated when auto_weight
    bool auto_weight = true;
    int max_iter = 60;
    double tol = 1e-8;
    int ensemble = 1;
    std::uint64_t seed = 1;
    int workers = 0;         // 0 = hardware concurrency
};

struct ContractionReport {
    double p_weight = 0.0;
    int iters = 0;
    std::vector<double> q;
    double final_residual = 0.0;
    bool reached_half = false;  // measured q <= 1/2 at the final weight

    std::string to_json() const;
};

struct EnsembleSolution {
    std::vector<Path> members;
    std::vector<WienerPath> wiener;
    ContractionReport report;
};

/// Localized solution with per-level stopping nodes.
struct LocalSolution {
    std::vector<Path> members;                  // highest-level path per member
    std::vector<std::vector<int>> tau;          // [member][level] stopping node index
    std::vector<bool> exploded;
    std::vector<double> explosion_estimate;     // 1/n-extrapolated limit of tau_n
    int n_levels = 0;

    std::string to_json() const;
};

struct NemytskiiValue {
    Field Fu;
    std::vector<Field> Bu;  // column n = g(t,.,u(.)) sqrt(lambda_n) e_n
};

NemytskiiValue nemytskii(const ProblemSpec& ps, double t, const Field& u);

/// Wiener path for ensemble member `member` (independent counter streams).
WienerPath sample_member(const NoiseModel& m, const TimeGrid& tg, std::uint64_t seed,
                         int member);

/// One application of the fixed-point map
/// L(phi)(t) = P(t,0)u0 + P*F(.,phi)(t) + P<>B(.,phi)(t), per member.
std::vector<Path> picard_step(const ProblemSpec& ps, const EvolutionFamily& ef,
                              const std::vector<WienerPath>& W,
                              const std::vector<Path>& phi, int workers = 0);

/// max over nodes of e^{-p t_k} (mean over members of ||.||^r)^{1/r};
/// spatial norm is the interpolation norm with exponent a (L^2 when a = 0).
double weighted_norm(const std::vector<Path>& ensemble, const PicardConfig& cfg, double a,
                     const EvolutionFamily* ef = nullptr);

EnsembleSolution picard_solve(const ProblemSpec& ps, const EvolutionFamily& ef,
                              const PicardConfig& cfg);
/// Same, with externally supplied Wiener paths (common random numbers).
EnsembleSolution picard_solve(const ProblemSpec& ps, const EvolutionFamily& ef,
                              const PicardConfig& cfg, std::vector<WienerPath> wiener);

/// Solve with f,g truncated at radii n = 1..n_levels (smooth radial clamp)
/// by semi-implicit marching; tau_n = first node with ||u||_a >= n.
LocalSolution local_solve(const ProblemSpec& ps, const EvolutionFamily& ef,
                          const PicardConfig& cfg, int n_levels);

} // namespace spde
