#pragma once

#include "ventsim/field.hpp"
#include "ventsim/grid.hpp"

#include <cmath>
#include <vector>

namespace ventsim {

/// Bilinear interpolation stencil on one of the three lattices (cells,
/// u-faces, v-faces), built from lattice ("grid") coordinates so that
/// integer positions sample nodes exactly. Coordinates outside the lattice
/// are clamped; the `*_live` flags record whether the positional derivative
/// survives the clamp, so forward sampling and the reverse-mode scatter stay
/// in lockstep.
struct LinStencil {
    int i0 = 0, j0 = 0;
    double tx = 0.0, ty = 0.0;
    bool x_live = true, y_live = true;
    int stride = 0; // row stride of the sampled array

    int idx00() const { return j0 * stride + i0; }
    int idx10() const { return j0 * stride + i0 + 1; }
    int idx01() const { return (j0 + 1) * stride + i0; }
    int idx11() const { return (j0 + 1) * stride + i0 + 1; }

    double value(const std::vector<double>& f) const {
        return (1 - tx) * (1 - ty) * f[idx00()] + tx * (1 - ty) * f[idx10()] +
               (1 - tx) * ty * f[idx01()] + tx * ty * f[idx11()];
    }

    /// d(value)/dx in physical units; zero if the x coordinate was clamped.
    double ddx(const std::vector<double>& f, double dx) const {
        if (!x_live) return 0.0;
        return ((1 - ty) * (f[idx10()] - f[idx00()]) + ty * (f[idx11()] - f[idx01()])) / dx;
    }

    double ddy(const std::vector<double>& f, double dy) const {
        if (!y_live) return 0.0;
        return ((1 - tx) * (f[idx01()] - f[idx00()]) + tx * (f[idx11()] - f[idx10()])) / dy;
    }

    /// Transpose of value(): distributes a cotangent over the four nodes.
    void scatter(std::vector<double>& cof, double w) const {
        cof[idx00()] += w * (1 - tx) * (1 - ty);
        cof[idx10()] += w * tx * (1 - ty);
        cof[idx01()] += w * (1 - tx) * ty;
        cof[idx11()] += w * tx * ty;
    }
};

namespace detail {

inline void clamp_axis(double g, int size, int& i0, double& t, bool& live) {
    if (g <= 0.0) {
        i0 = 0;
        t = 0.0;
        live = false;
    } else if (g >= size - 1) {
        i0 = size - 2;
        t = 1.0;
        live = false;
    } else {
        i0 = static_cast<int>(g);
        t = g - i0;
        live = true;
    }
}

inline LinStencil stencil(double gx, double gy, int sx, int sy) {
    LinStencil s;
    s.stride = sx;
    clamp_axis(gx, sx, s.i0, s.tx, s.x_live);
    clamp_axis(gy, sy, s.j0, s.ty, s.y_live);
    return s;
}

} // namespace detail

// Lattice coordinates: node (i, j) of a lattice sits at grid coordinate
// (i, j). Cell lattice nodes are cell centers; u/v lattices are the face
// sets. Converting a physical point: cell (x/dx - 0.5, y/dy - 0.5),
// u (x/dx, y/dy - 0.5), v (x/dx - 0.5, y/dy).

inline LinStencil cell_stencil(const Grid& g, double gx, double gy) {
    return detail::stencil(gx, gy, g.nx, g.ny);
}

inline LinStencil u_stencil(const Grid& g, double gx, double gy) {
    return detail::stencil(gx, gy, g.nx + 1, g.ny);
}

inline LinStencil v_stencil(const Grid& g, double gx, double gy) {
    return detail::stencil(gx, gy, g.nx, g.ny + 1);
}

/// Physical-coordinate sample of a cell-centered field (sensor readings).
inline double sample_cell(const ScalarField& f, double x, double y) {
    const Grid& g = f.grid;
    return cell_stencil(g, x / g.dx - 0.5, y / g.dy - 0.5).value(f.values);
}

} // namespace ventsim
