#pragma once

#include "ventsim/grid.hpp"

#include <cmath>
#include <utility>
#include <vector>

namespace ventsim {

/// One real value per cell, row-major (index = j*nx + i).
struct ScalarField {
    Grid grid;
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(const Grid& g, double fill = 0.0)
        : grid(g), values(static_cast<size_t>(g.cell_count()), fill) {}

    double& operator()(int i, int j) { return values[grid.cell_index(i, j)]; }
    double operator()(int i, int j) const { return values[grid.cell_index(i, j)]; }

    void fill(double x) { values.assign(values.size(), x); }

    bool all_finite() const {
        for (double x : values)
            if (!std::isfinite(x)) return false;
        return true;
    }

    bool operator==(const ScalarField&) const = default;
};

/// Staggered MAC velocity: u on vertical faces, v on horizontal faces.
struct VectorField {
    Grid grid;
    std::vector<double> u; ///< (nx+1)*ny values [m/s]
    std::vector<double> v; ///< nx*(ny+1) values [m/s]

    VectorField() = default;
    explicit VectorField(const Grid& g)
        : grid(g),
          u(static_cast<size_t>(g.u_count()), 0.0),
          v(static_cast<size_t>(g.v_count()), 0.0) {}

    double& at_u(int i, int j) { return u[grid.u_index(i, j)]; }
    double at_u(int i, int j) const { return u[grid.u_index(i, j)]; }
    double& at_v(int i, int j) { return v[grid.v_index(i, j)]; }
    double at_v(int i, int j) const { return v[grid.v_index(i, j)]; }

    void fill(double uval, double vval) {
        u.assign(u.size(), uval);
        v.assign(v.size(), vval);
    }

    bool all_finite() const {
        for (double x : u)
            if (!std::isfinite(x)) return false;
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }

    double max_abs() const {
        double m = 0.0;
        for (double x : u) m = std::max(m, std::abs(x));
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    }

    bool operator==(const VectorField&) const = default;
};

/// Arithmetic mean over all cells. Uniform cell areas make this the
/// discrete volume average.
double mean(const ScalarField& f);

/// Maximum value and the first cell (row-major scan) attaining it.
std::pair<double, std::pair<int, int>> max_cell(const ScalarField& f);

double min_value(const ScalarField& f);
double max_value(const ScalarField& f);

} // namespace ventsim
