#pragma once

#include "spde/solver.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace spde {

struct HolderEstimate {
    double est = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    bool degenerate = false;  // all increments vanish; est reported as +inf
};

/// Per-member OLS slope of log median-increment-norm against log lag over
/// dyadic lags; ensemble median and bootstrap 90% CI.
HolderEstimate estimate_holder(const std::vector<Path>& ensemble, SpatialNorm norm,
                               const std::vector<int>& lags, std::uint64_t boot_seed = 7,
                               int boot_rounds = 200);

/// Adjoint-evolved test function phi(s) = P(t,s)* x on the solution nodes.
std::vector<Field> adjoint_test_function(const EvolutionFamily& ef, int t_node,
                                         const Field& xstar);

/// Signed discrete residual of the variational identity for one member,
/// tested against phi(s) = P(t,s)* x.
double variational_residual(const Path& U, const WienerPath& W, const EvolutionFamily& ef,
                            const ProblemSpec& ps, int t_node, const Field& xstar,
                            const std::vector<Field>* phi_cached = nullptr);

struct ScenarioRun {
    std::string id = "scenario";
    ProblemSpec ps;
    PicardConfig cfg;
    int n_cells = 64;
    int m_steps = 256;
    int substeps = 1;
    Scheme scheme = Scheme::BackwardEuler;
    std::vector<std::string> checks;
    double holder_lo = 0.30;  // acceptance window for the time exponent CI
    double holder_hi = 0.55;
};

struct RegularityReport {
    std::string scenario_id;
    int n_cells = 0, m_steps = 0, substeps = 0;
    double T = 0.0;
    std::uint64_t seed = 0;
    int ensemble = 0;
    HolderEstimate time_exponent;
    std::map<std::string, double> constants;
    std::map<std::string, bool> flags;
    ContractionReport contraction;
    bool has_solution = false;

    bool all_pass() const;
    std::string to_json() const;
};

/// Solve the scenario and run the requested checks; deterministic member-index
/// aggregation, so a fixed seed yields a byte-identical report.
RegularityReport run_ensemble(const ScenarioRun& scenario,
                              std::vector<Path>* solution_out = nullptr);

} // namespace spde
