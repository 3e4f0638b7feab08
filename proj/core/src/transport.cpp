#include "ventsim/transport.hpp"

#include "ventsim/errors.hpp"
#include "ventsim/interp.hpp"

#include <cmath>

namespace ventsim {

OccupancyField OccupancyField::build(const Grid& grid, const Rect& region) {
    OccupancyField occ;
    occ.region = region;
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            double x = grid.cell_x(i), y = grid.cell_y(j);
            if (x >= region.x0 && x <= region.x1 && y >= region.y0 && y <= region.y1)
                occ.cells.push_back(grid.cell_index(i, j));
        }
    return occ;
}

bool is_dirichlet_boundary(ScalarRole role, SegmentKind kind) {
    if (kind == SegmentKind::SupplyVent) return true;
    if (role == ScalarRole::Temperature && kind == SegmentKind::OutsideWall) return true;
    return false;
}

ScalarField advect_scalar(const ScalarField& f, const VectorField& v, double dt) {
    const Grid& g = f.grid;
    ScalarField out = f;
    for (int j = 1; j < g.ny - 1; ++j) {
        for (int i = 1; i < g.nx - 1; ++i) {
            double vel_x = u_stencil(g, i + 0.5, j).value(v.u);
            double vel_y = v_stencil(g, i, j + 0.5).value(v.v);
            LinStencil s = cell_stencil(g, i - dt * vel_x / g.dx, j - dt * vel_y / g.dy);
            out(i, j) = s.value(f.values);
        }
    }
    return out;
}

double scalar_flux_sum(const ScalarField& f, const BoundaryMap& bmap, ScalarRole role, int i,
                       int j) {
    const Grid& g = f.grid;
    const double ax = 1.0 / (g.dx * g.dx), ay = 1.0 / (g.dy * g.dy);
    auto flux_on = [&](int ni, int nj) {
        return !g.is_perimeter(ni, nj) || is_dirichlet_boundary(role, bmap.cell(ni, nj));
    };
    double c = f(i, j);
    double acc = 0.0;
    if (flux_on(i - 1, j)) acc += ax * (f(i - 1, j) - c);
    if (flux_on(i + 1, j)) acc += ax * (f(i + 1, j) - c);
    if (flux_on(i, j - 1)) acc += ay * (f(i, j - 1) - c);
    if (flux_on(i, j + 1)) acc += ay * (f(i, j + 1) - c);
    return acc;
}

ScalarField diffuse_scalar(const ScalarField& f, const BoundaryMap& bmap, ScalarRole role,
                           double k, double dt) {
    if (k < 0.0) throw std::invalid_argument("diffuse_scalar: k must be non-negative");
    const Grid& g = f.grid;
    double stab = k * dt * (1.0 / (g.dx * g.dx) + 1.0 / (g.dy * g.dy));
    if (stab > 0.25)
        throw NumericalError("diffuse_scalar: explicit stability violated (k*dt*(1/dx^2+1/dy^2) = " +
                             std::to_string(stab) + " > 0.25); reduce dt_solver");
    if (k == 0.0) return f;

    ScalarField out = f;
    for (int j = 1; j < g.ny - 1; ++j)
        for (int i = 1; i < g.nx - 1; ++i)
            out(i, j) = f(i, j) + k * dt * scalar_flux_sum(f, bmap, role, i, j);
    return out;
}

void add_sources(ScalarField& f, const OccupancyField& occ, double coeff, double headcount,
                 double dt) {
    if (coeff < 0.0) throw std::invalid_argument("add_sources: coefficient must be non-negative");
    double d = occ.density(headcount);
    if (d == 0.0) return;
    for (int c : occ.cells) f.values[c] += coeff * d * dt;
}

std::pair<int, int> interior_neighbor(const Grid& g, int i, int j) {
    // Corners step diagonally inward so every donor is a true interior cell
    // and the perimeter writes commute.
    int ni = i, nj = j;
    if (i == 0) ni = 1;
    else if (i == g.nx - 1) ni = g.nx - 2;
    if (j == 0) nj = 1;
    else if (j == g.ny - 1) nj = g.ny - 2;
    return {ni, nj};
}

void apply_temperature_bc(ScalarField& t, const BoundaryMap& bmap, double u2, double t_ambient) {
    const Grid& g = t.grid;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (!g.is_perimeter(i, j)) continue;
            switch (bmap.cell(i, j)) {
                case SegmentKind::SupplyVent: t(i, j) = u2; break;
                case SegmentKind::OutsideWall: t(i, j) = t_ambient; break;
                default: {
                    auto [ni, nj] = interior_neighbor(g, i, j);
                    t(i, j) = t(ni, nj);
                }
            }
        }
}

double apply_co2_bc(ScalarField& c, const BoundaryMap& bmap, double alpha, double c_fresh) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("apply_co2_bc: alpha must lie in [0, 1]");
    const Grid& g = c.grid;
    double m = mean(c);
    double supply_value = alpha * c_fresh + (1.0 - alpha) * m;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (!g.is_perimeter(i, j)) continue;
            if (bmap.cell(i, j) == SegmentKind::SupplyVent) {
                c(i, j) = supply_value;
            } else {
                auto [ni, nj] = interior_neighbor(g, i, j);
                c(i, j) = c(ni, nj);
            }
        }
    return m;
}

void transport_step(ScalarField& t, ScalarField& c, const VectorField& v,
                    const BoundaryMap& bmap, const OccupancyField& occ, const ModelParams& params,
                    double u2, double headcount, double t_ambient, double c_fresh, double dt) {
    apply_temperature_bc(t, bmap, u2, t_ambient);
    apply_co2_bc(c, bmap, params.alpha, c_fresh);

    t = advect_scalar(t, v, dt);
    c = advect_scalar(c, v, dt);

    t = diffuse_scalar(t, bmap, ScalarRole::Temperature, params.k_te, dt);
    c = diffuse_scalar(c, bmap, ScalarRole::Co2, params.k_c, dt);

    add_sources(t, occ, params.alpha_te, headcount, dt);
    add_sources(c, occ, params.alpha_c, headcount, dt);

    apply_temperature_bc(t, bmap, u2, t_ambient);
    apply_co2_bc(c, bmap, params.alpha, c_fresh);
}

} // namespace ventsim
