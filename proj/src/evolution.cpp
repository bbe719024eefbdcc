#include "spde/evolution.hpp"

#include <cmath>
#include <stdexcept>

namespace spde {

EvolutionFamily::EvolutionFamily(OperatorFamily fam, SpaceGrid grid, TimeGrid tgrid,
                                 Scheme scheme, int substeps)
    : fam_(std::move(fam)),
      grid_(std::move(grid)),
      tgrid_(std::move(tgrid)),
      scheme_(scheme),
      substeps_(substeps) {
    if (substeps_ < 1) throw std::domain_error("EvolutionFamily: substeps >= 1");
    n_sub_ = tgrid_.m_steps * substeps_;
    sub_dt_ = tgrid_.dt / substeps_;
    steps_.resize(n_sub_);
    ops_.resize(n_sub_ + 1);
    spectra_.resize(n_sub_ + 1);
}

std::pair<int, double> EvolutionFamily::snap(double t) const {
    int j = int(std::lround(t / sub_dt_));
    j = std::max(0, std::min(n_sub_, j));
    return {j, std::abs(t - sub_time(j))};
}

const DiscreteOperator& EvolutionFamily::operator_at(int j) const {
    {
        std::lock_guard<std::mutex> lk(cache_mutex_);
        if (ops_[j]) return *ops_[j];
    }
    DiscreteOperator op = assemble(fam_, grid_, sub_time(j));
    std::lock_guard<std::mutex> lk(cache_mutex_);
    if (!ops_[j]) ops_[j] = std::move(op);
    return *ops_[j];
}

const SpectralData& EvolutionFamily::spectral_at(int j) const {
    {
        std::lock_guard<std::mutex> lk(cache_mutex_);
        if (spectra_[j]) return *spectra_[j];
    }
    SpectralData sd = spectrum(operator_at(j));
    std::lock_guard<std::mutex> lk(cache_mutex_);
    if (!spectra_[j]) spectra_[j] = std::move(sd);
    return *spectra_[j];
}

const EvolutionFamily::StepData& EvolutionFamily::step_data(int j) const {
    {
        std::lock_guard<std::mutex> lk(cache_mutex_);
        if (steps_[j]) return *steps_[j];
    }
    const int n1 = grid_.n_cells + 1;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n1, n1);
    StepData sdta;
    if (scheme_ == Scheme::BackwardEuler) {
        // Coefficients frozen at the right endpoint of the substep.
        const Eigen::MatrixXd A = assemble(fam_, grid_, sub_time(j + 1)).matrix;
        sdta.lu = Eigen::PartialPivLU<Eigen::MatrixXd>(I - sub_dt_ * A);
    } else {
        const Eigen::MatrixXd A = assemble(fam_, grid_, sub_time(j) + 0.5 * sub_dt_).matrix;
        sdta.lu = Eigen::PartialPivLU<Eigen::MatrixXd>(I - 0.5 * sub_dt_ * A);
        sdta.rhs = I + 0.5 * sub_dt_ * A;
    }
    std::lock_guard<std::mutex> lk(cache_mutex_);
    if (!steps_[j]) steps_[j] = std::move(sdta);
    return *steps_[j];
}

Field EvolutionFamily::apply_idx(int jt, int js, const Field& x) const {
    if (jt < js) throw std::domain_error("apply: need s <= t");
    if (js < 0 || jt > n_sub_) throw std::domain_error("apply: index off the subgrid");
    if (jt == js) return x;
    Field u = x;
    for (int j = js; j < jt; ++j) {
        const StepData& sdta = step_data(j);
        if (scheme_ == Scheme::CrankNicolson) u.values = sdta.rhs * u.values;
        u.values = sdta.lu.solve(u.values);
        if (!u.values.allFinite())
            throw std::runtime_error("apply: singular implicit step at substep " + std::to_string(j));
    }
    return u;
}

Field EvolutionFamily::apply(double t, double s, const Field& x) const {
    if (t < s) throw std::domain_error("apply: need s <= t");
    return apply_idx(snap(t).first, snap(s).first, x);
}

Field EvolutionFamily::apply_adjoint_idx(int jt, int js, const Field& x) const {
    if (jt < js) throw std::domain_error("apply_adjoint: need s <= t");
    if (js < 0 || jt > n_sub_) throw std::domain_error("apply_adjoint: index off the subgrid");
    const Eigen::VectorXd w = quad_weights(grid_);
    Field u = x;
    for (int j = jt - 1; j >= js; --j) {
        const StepData& sdta = step_data(j);
        Eigen::VectorXd v = w.asDiagonal() * u.values;
        v = sdta.lu.transpose().solve(v);
        if (scheme_ == Scheme::CrankNicolson) v = sdta.rhs.transpose() * v;
        u.values = w.cwiseInverse().asDiagonal() * v;
        if (!u.values.allFinite())
            throw std::runtime_error("apply_adjoint: singular step at substep " + std::to_string(j));
    }
    return u;
}

double EvolutionFamily::cocycle_defect(double t, double r, double s, const Field& x) const {
    if (!(s <= r && r <= t)) throw std::domain_error("cocycle_defect: need s <= r <= t");
    Field lhs = apply(t, s, x);
    Field rhs = apply(t, r, apply(r, s, x));
    Field d = lhs - rhs;
    return lp_norm(d, 2.0) / std::max(lp_norm(x, 2.0), 1e-300);
}

EvolutionFamily::MeasuredConstant EvolutionFamily::smoothing_constant(
    double alpha, double beta, const std::vector<SampleTriple>& samples) const {
    if (alpha < beta) throw std::domain_error("smoothing_constant: need alpha >= beta");
    MeasuredConstant mc;
    for (const auto& sm : samples) {
        const auto [js, _ds] = snap(sm.s);
        const auto [jt, _dt] = snap(sm.t);
        if (jt <= js) throw std::domain_error("smoothing_constant: need s < t");
        const double denom = interp_norm(operator_at(js), spectral_at(js), beta, fam_.w, sm.x);
        if (denom < 1e-300) {
            ++mc.skipped;
            continue;
        }
        Field px = apply_idx(jt, js, sm.x);
        const double num = interp_norm(operator_at(jt), spectral_at(jt), alpha, fam_.w, px);
        const double ratio = num * std::pow(sub_time(jt) - sub_time(js), alpha - beta) / denom;
        mc.ratios.push_back(ratio);
        mc.C = std::max(mc.C, ratio);
    }
    return mc;
}

EvolutionFamily::MeasuredConstant EvolutionFamily::singular_bound(
    double theta, const std::vector<SampleTriple>& samples) const {
    if (!(theta < fam_.mu)) throw std::domain_error("singular_bound: need theta < mu");
    MeasuredConstant mc;
    for (const auto& sm : samples) {
        const auto js = snap(sm.s).first;
        const auto jt = snap(sm.t).first;
        if (jt <= js) throw std::domain_error("singular_bound: need s < t");
        const double denom = lp_norm(sm.x, 2.0);
        if (denom < 1e-300) {
            ++mc.skipped;
            continue;
        }
        Field y = frac_power_apply(js, theta, sm.x);
        Field py = apply_idx(jt, js, y);
        const double ratio =
            lp_norm(py, 2.0) * std::pow(sub_time(jt) - sub_time(js), theta) / denom;
        mc.ratios.push_back(ratio);
        mc.C = std::max(mc.C, ratio);
    }
    return mc;
}

Field EvolutionFamily::frac_power_apply(int j, double theta, const Field& x) const {
    if (theta == 0.0) return x;
    const SpectralData& sd = spectral_at(j);
    const double w = fam_.w;
    if (sd.self_adjoint) {
        const Eigen::VectorXd qw = quad_weights(grid_);
        Eigen::VectorXd c = sd.eigenvectors.transpose() * (qw.asDiagonal() * x.values);
        for (int k = 0; k < c.size(); ++k) {
            const double lam = sd.eigenvalues[k];
            if (!(w - lam > 0.0))
                throw std::domain_error("frac_power_apply: spectrum not strictly left of w");
            c[k] *= std::pow(w - lam, theta);
        }
        Field out = x;
        out.values = sd.eigenvectors * c;
        return out;
    }
    DiscreteOperator pw = frac_power(operator_at(j), sd, theta, w);
    Field out = x;
    out.values = pw.matrix * x.values;
    return out;
}

} // namespace spde
