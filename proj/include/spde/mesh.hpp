#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>
#include <iosfwd>

namespace spde {

/// Uniform grid on the unit interval S = (0,1), nodes 0..n_cells.
struct SpaceGrid {
    int n_cells = 0;
    double h = 0.0;
    std::vector<double> nodes;

    static SpaceGrid make(int n_cells);
};

/// Uniform time grid on [0,T].
struct TimeGrid {
    double T = 0.0;
    int m_steps = 0;
    double dt = 0.0;
    std::vector<double> times;

    static TimeGrid make(double T, int m_steps);
};

/// Nodal values of a function on a SpaceGrid.
struct Field {
    SpaceGrid grid;
    Eigen::VectorXd values;

    static Field zero(const SpaceGrid& g);
    static Field constant(const SpaceGrid& g, double c);
    /// Sample a scalar function of the space coordinate at the nodes.
    template <class F>
    static Field of(const SpaceGrid& g, F&& fn) {
        Field f = zero(g);
        for (int i = 0; i <= g.n_cells; ++i) f.values[i] = fn(g.nodes[i]);
        return f;
    }

    Field& operator+=(const Field& o) { values += o.values; return *this; }
    Field& operator-=(const Field& o) { values -= o.values; return *this; }
    Field& operator*=(double c) { values *= c; return *this; }
    friend Field operator+(Field a, const Field& b) { a += b; return a; }
    friend Field operator-(Field a, const Field& b) { a -= b; return a; }
    friend Field operator*(double c, Field f) { f *= c; return f; }
};

/// One field per time node.
struct Path {
    TimeGrid tgrid;
    std::vector<Field> fields;

    static Path zero(const SpaceGrid& g, const TimeGrid& tg);
};

/// Trapezoidal quadrature weights (boundary half-weights), total mass 1.
Eigen::VectorXd quad_weights(const SpaceGrid& g);

/// Discrete L^p norm by trapezoidal quadrature; p = inf gives the max norm.
double lp_norm(const Field& f, double p);

/// Discrete W^{1,2} norm: (||f||_2^2 + ||Df||_2^2)^{1/2}, D the forward
/// difference quotient on cells (midpoint quadrature for the gradient part).
double sobolev1_norm(const Field& f);

enum class SpatialNorm { L2, Sup };

double spatial_norm(const Field& f, SpatialNorm which);

/// sup over node pairs k<l of |p_l - p_k| / (t_l - t_k)^lambda.
/// All pairs for <= 513 time nodes, dyadic lags above.
double holder_seminorm_time(const Path& p, double lambda, SpatialNorm norm);

/// CSV row format: t,x0000,x0001,...
void write_csv(std::ostream& os, const Path& p);
Path read_csv(std::istream& is, const SpaceGrid& g);

} // namespace spde
