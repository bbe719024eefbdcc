#pragma once

#include "spde/analysis.hpp"

#include <map>
#include <string>

namespace spde {

/// Parsed scenario configuration (documented grammar in the README).
/// Unknown sections or keys are errors: hypothesis enforcement is strict.
struct Scenario {
    std::string name = "scenario";

    // [operator]
    std::string op_family = "constant";  // constant | linear_t | perturbed_cosine | zero
    double op_param = 1.0;               // diff / rate / eps
    double a0 = 0.0;
    double mu = 1.0;
    double kappa = 1.0;
    std::string w = "auto";

    // [noise]
    double gamma = 2.0;
    int N = 16;
    std::string regime = "linf";  // linf | lq
    double q = 4.0;
    double beta = 0.25;

    // [nonlinearity]
    std::string f_id = "zero";  // zero | linear | tanh | square | cube
    double f_scale = 1.0;
    std::string g_id = "zero";  // zero | constant | linear | affine
    double g_scale = 1.0;
    double g_offset = 0.0;
    std::string lipschitz = "global";
    double theta_F = 0.0, theta_B = 0.0, a = 0.0;

    // [initial]
    std::string u0_id = "constant";  // constant | cospi | mix | step
    double u0_scale = 1.0;

    // [grids]
    int n_cells = 64;
    int m_steps = 256;
    int substeps = 1;
    double T = 1.0;

    // [run]
    int M = 100;
    double r = 2.0;
    std::string p_weight = "auto";
    std::uint64_t seed = 1;
    double tol = 1e-7;
    int max_iter = 60;
    int workers = 0;

    // [checks]
    std::vector<std::string> check_ids;
    double holder_lo = 0.30;
    double holder_hi = 0.55;
    bool write_paths = false;

    /// Validate hypothesis constraints and build the runnable scenario.
    /// Error messages cite the violated hypothesis tag.
    ScenarioRun build() const;
};

Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

} // namespace spde
