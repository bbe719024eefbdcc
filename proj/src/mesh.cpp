#include "spde/mesh.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <iomanip>

namespace spde {

SpaceGrid SpaceGrid::make(int n_cells) {
    if (n_cells < 4) throw std::domain_error("SpaceGrid: n_cells must be >= 4");
    SpaceGrid g;
    g.n_cells = n_cells;
    g.h = 1.0 / n_cells;
    g.nodes.resize(n_cells + 1);
    for (int i = 0; i <= n_cells; ++i) g.nodes[i] = double(i) / n_cells;
    return g;
}

TimeGrid TimeGrid::make(double T, int m_steps) {
    if (!(T > 0.0)) throw std::domain_error("TimeGrid: T must be positive");
    if (m_steps < 1) throw std::domain_error("TimeGrid: m_steps must be positive");
    TimeGrid tg;
    tg.T = T;
    tg.m_steps = m_steps;
    tg.dt = T / m_steps;
    tg.times.resize(m_steps + 1);
    for (int k = 0; k <= m_steps; ++k) tg.times[k] = T * double(k) / m_steps;
    tg.times[0] = 0.0;
    tg.times[m_steps] = T;
    return tg;
}

Field Field::zero(const SpaceGrid& g) {
    Field f;
    f.grid = g;
    f.values = Eigen::VectorXd::Zero(g.n_cells + 1);
    return f;
}

Field Field::constant(const SpaceGrid& g, double c) {
    Field f = zero(g);
    f.values.setConstant(c);
    return f;
}

Path Path::zero(const SpaceGrid& g, const TimeGrid& tg) {
    Path p;
    p.tgrid = tg;
    p.fields.assign(tg.m_steps + 1, Field::zero(g));
    return p;
}

Eigen::VectorXd quad_weights(const SpaceGrid& g) {
    Eigen::VectorXd w = Eigen::VectorXd::Constant(g.n_cells + 1, g.h);
    w[0] = 0.5 * g.h;
    w[g.n_cells] = 0.5 * g.h;
    return w;
}

double lp_norm(const Field& f, double p) {
    if (p < 1.0) throw std::domain_error("lp_norm: p must be >= 1");
    const int n = f.grid.n_cells;
    if (std::isinf(p)) {
        double m = 0.0;
        for (int i = 0; i <= n; ++i) m = std::max(m, std::abs(f.values[i]));
        return m;
    }
    const Eigen::VectorXd w = quad_weights(f.grid);
    double s = 0.0;
    for (int i = 0; i <= n; ++i) s += w[i] * std::pow(std::abs(f.values[i]), p);
    return std::pow(s, 1.0 / p);
}

double sobolev1_norm(const Field& f) {
    const int n = f.grid.n_cells;
    if (n < 2) throw std::domain_error("sobolev1_norm: n_cells must be >= 2");
    const double l2 = lp_norm(f, 2.0);
    double grad2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = (f.values[i + 1] - f.values[i]) / f.grid.h;
        grad2 += d * d * f.grid.h;
    }
    return std::sqrt(l2 * l2 + grad2);
}

double spatial_norm(const Field& f, SpatialNorm which) {
    return which == SpatialNorm::L2 ? lp_norm(f, 2.0)
                                    : lp_norm(f, std::numeric_limits<double>::infinity());
}

double holder_seminorm_time(const Path& p, double lambda, SpatialNorm norm) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw std::domain_error("holder_seminorm_time: lambda must be in (0,1)");
    const int m = int(p.fields.size()) - 1;
    if (m < 1) throw std::domain_error("holder_seminorm_time: need >= 2 time nodes");
    double best = 0.0;
    auto ratio = [&](int k, int l) {
        const double dtkl = p.tgrid.times[l] - p.tgrid.times[k];
        Field diff = p.fields[l] - p.fields[k];
        return spatial_norm(diff, norm) / std::pow(dtkl, lambda);
    };
    if (m + 1 <= 513) {
        for (int k = 0; k < m; ++k)
            for (int l = k + 1; l <= m; ++l) best = std::max(best, ratio(k, l));
    } else {
        for (int lag = 1; lag <= m; lag *= 2)
            for (int k = 0; k + lag <= m; ++k) best = std::max(best, ratio(k, k + lag));
    }
    return best;
}

void write_csv(std::ostream& os, const Path& p) {
    const int n = p.fields.empty() ? -1 : p.fields[0].grid.n_cells;
    os << "t";
    for (int i = 0; i <= n; ++i)
        os << ",x" << std::setw(4) << std::setfill('0') << i << std::setfill(' ');
    os << "\n";
    os << std::setprecision(17);
    for (size_t k = 0; k < p.fields.size(); ++k) {
        os << p.tgrid.times[k];
        for (int i = 0; i <= n; ++i) os << "," << p.fields[k].values[i];
        os << "\n";
    }
}

Path read_csv(std::istream& is, const SpaceGrid& g) {
    Path p;
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("read_csv: empty input");
    std::vector<Field> fields;
    std::vector<double> times;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        times.push_back(std::stod(cell));
        Field f = Field::zero(g);
        for (int i = 0; i <= g.n_cells; ++i) {
            if (!std::getline(ss, cell, ',')) throw std::runtime_error("read_csv: short row");
            f.values[i] = std::stod(cell);
        }
        fields.push_back(std::move(f));
    }
    if (times.size() < 2) throw std::runtime_error("read_csv: need >= 2 rows");
    p.tgrid = TimeGrid::make(times.back(), int(times.size()) - 1);
    p.fields = std::move(fields);
    return p;
}

} // namespace spde
