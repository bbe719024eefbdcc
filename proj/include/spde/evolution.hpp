#pragma once

#include "spde/elliptic.hpp"
#include "spde/mesh.hpp"

#include <Eigen/LU>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

namespace spde {

enum class Scheme { BackwardEuler, CrankNicolson };

/// Two-parameter solution operator P(t,s) of u' = A(t)u, realized by implicit
/// time-stepping on an internal refinement of the solution TimeGrid.
/// Per-substep factorizations and per-node eigendecompositions are cached;
/// the caches are idempotent and safe for concurrent fill.
class EvolutionFamily {
public:
    EvolutionFamily(OperatorFamily fam, SpaceGrid grid, TimeGrid tgrid,
                    Scheme scheme = Scheme::BackwardEuler, int substeps = 4);

    const OperatorFamily& family() const { return fam_; }
    const SpaceGrid& grid() const { return grid_; }
    const TimeGrid& tgrid() const { return tgrid_; }
    int substeps() const { return substeps_; }
    int sub_nodes() const { return n_sub_ + 1; }
    double sub_dt() const { return sub_dt_; }
    double sub_time(int j) const { return sub_dt_ * j; }

    /// Nearest subgrid index and the snap distance.
    std::pair<int, double> snap(double t) const;

    /// March x from subgrid node js to jt (one implicit solve per substep).
    Field apply_idx(int jt, int js, const Field& x) const;
    /// March x from s to t; off-grid arguments snap to the subgrid.
    Field apply(double t, double s, const Field& x) const;

    /// P(t,s)* x in the trapezoidal L^2 inner product (transpose stepping).
    Field apply_adjoint_idx(int jt, int js, const Field& x) const;

    /// ||P(t,s)x - P(t,r)P(r,s)x||_2 / max(||x||_2, eps).
    double cocycle_defect(double t, double r, double s, const Field& x) const;

    /// Assembled operator at subgrid node j (cached).
    const DiscreteOperator& operator_at(int j) const;
    /// Eigendecomposition at subgrid node j (cached).
    const SpectralData& spectral_at(int j) const;

    /// Apply (w - A(tau_j))^theta to x via the cached eigendecomposition.
    Field frac_power_apply(int j, double theta, const Field& x) const;

    struct SampleTriple {
        double s, t;
        Field x;
    };
    struct MeasuredConstant {
        double C = 0.0;
        std::vector<double> ratios;
        int skipped = 0;
    };

    /// max over samples of ||P(t,s)x||_{E_alpha^t} (t-s)^{alpha-beta} / ||x||_{E_beta^s}.
    MeasuredConstant smoothing_constant(double alpha, double beta,
                                        const std::vector<SampleTriple>& samples) const;

    /// max over samples of ||P(t,s)(w-A(s))^theta x||_2 (t-s)^theta / ||x||_2.
    MeasuredConstant singular_bound(double theta,
                                    const std::vector<SampleTriple>& samples) const;

private:
    OperatorFamily fam_;
    SpaceGrid grid_;
    TimeGrid tgrid_;
    Scheme scheme_;
    int substeps_;
    int n_sub_;
    double sub_dt_;

    struct StepData {
        Eigen::PartialPivLU<Eigen::MatrixXd> lu;  // implicit factor
        Eigen::MatrixXd rhs;                      // CN explicit factor (empty for BE)
    };
    mutable std::vector<std::optional<StepData>> steps_;
    mutable std::vector<std::optional<DiscreteOperator>> ops_;
    mutable std::vector<std::optional<SpectralData>> spectra_;
    mutable std::mutex cache_mutex_;

    const StepData& step_data(int j) const;  // step from node j to j+1
};

} // namespace spde
