#pragma once

#include <stdexcept>
#include <string>

namespace ventsim {

/// Uniform Cartesian grid over a rectangular room.
///
/// Scalars (temperature, CO2, pressure) live at cell centers; velocity
/// components live on cell faces in a staggered (MAC) layout:
///
///     u(i,j): vertical face at (i*dx, (j+0.5)*dy),   i = 0..nx, j = 0..ny-1
///     v(i,j): horizontal face at ((i+0.5)*dx, j*dy), i = 0..nx-1, j = 0..ny
///
/// Cell (i,j) has its center at ((i+0.5)*dx, (j+0.5)*dy).
struct Grid {
    int nx = 0;      ///< cell count along x
    int ny = 0;      ///< cell count along y
    double lx = 0;   ///< room length [m]
    double ly = 0;   ///< room height [m]
    double dx = 0;   ///< cell size along x [m]
    double dy = 0;   ///< cell size along y [m]

    int cell_count() const { return nx * ny; }
    int u_count() const { return (nx + 1) * ny; }
    int v_count() const { return nx * (ny + 1); }

    int cell_index(int i, int j) const { return j * nx + i; }
    int u_index(int i, int j) const { return j * (nx + 1) + i; }
    int v_index(int i, int j) const { return j * nx + i; }

    double cell_x(int i) const { return (i + 0.5) * dx; }
    double cell_y(int j) const { return (j + 0.5) * dy; }
    double u_x(int i) const { return i * dx; }
    double u_y(int j) const { return (j + 0.5) * dy; }
    double v_x(int i) const { return (i + 0.5) * dx; }
    double v_y(int j) const { return j * dy; }

    /// True for cells of the outermost ring, which carry the scalar
    /// boundary conditions.
    bool is_perimeter(int i, int j) const {
        return i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
    }

    bool contains(double x, double y) const {
        return x >= 0.0 && x <= lx && y >= 0.0 && y <= ly;
    }

    bool operator==(const Grid&) const = default;
};

/// Builds a grid, validating extents and minimum resolution.
inline Grid make_grid(double lx, double ly, int nx, int ny) {
    if (lx <= 0.0 || ly <= 0.0)
        throw std::invalid_argument("make_grid: extents must be positive, got lx=" +
                                    std::to_string(lx) + " ly=" + std::to_string(ly));
    if (nx < 4 || ny < 4)
        throw std::invalid_argument("make_grid: cell counts must be >= 4, got nx=" +
                                    std::to_string(nx) + " ny=" + std::to_string(ny));
    Grid g;
    g.nx = nx;
    g.ny = ny;
    g.lx = lx;
    g.ly = ly;
    g.dx = lx / nx;
    g.dy = ly / ny;
    return g;
}

} // namespace ventsim
