#include "ventsim/ns_solver.hpp"

#include "ventsim/errors.hpp"
#include "ventsim/interp.hpp"

#include <cmath>
#include <numeric>

namespace ventsim {

void NsSettings::validate() const {
    if (dt_solver <= 0.0) throw ConfigError("dt_solver must be positive");
    if (!(poisson_tol > 0.0 && poisson_tol <= 1e-2))
        throw ConfigError("poisson_tol must lie in (0, 1e-2]");
    if (poisson_max_iter < 1) throw ConfigError("poisson_max_iter must be >= 1");
    if (nu < 0.0) throw ConfigError("nu must be non-negative");
    if (rho <= 0.0) throw ConfigError("rho must be positive");
}

namespace {

// Outward-directed flux through every boundary face [m^2/s per unit depth].
double net_boundary_outflux(const VectorField& v) {
    const Grid& g = v.grid;
    double q = 0.0;
    for (int i = 0; i < g.nx; ++i) {
        q += v.at_v(i, g.ny) * g.dx;  // top: outward is +y
        q -= v.at_v(i, 0) * g.dx;     // bottom: outward is -y
    }
    for (int j = 0; j < g.ny; ++j) {
        q += v.at_u(g.nx, j) * g.dy;  // right: outward is +x
        q -= v.at_u(0, j) * g.dy;     // left: outward is -x
    }
    return q;
}

} // namespace

void apply_velocity_bc(VectorField& v, const BoundaryMap& bmap, double u1, VelocityBcMode mode) {
    if (u1 < 0.0) throw std::invalid_argument("apply_velocity_bc: u1 must be non-negative");
    const Grid& g = v.grid;
    const bool full = (mode == VelocityBcMode::Full);

    double return_len = 0.0;

    // Top / bottom rows hold v-faces; supply air enters normal to the side.
    for (int i = 0; i < g.nx; ++i) {
        switch (bmap.top_face[i]) {
            case SegmentKind::SupplyVent: v.at_v(i, g.ny) = -u1; break;
            case SegmentKind::ReturnVent:
                if (full) v.at_v(i, g.ny) = v.at_v(i, g.ny - 1);
                return_len += g.dx;
                break;
            default: v.at_v(i, g.ny) = 0.0; break;
        }
        switch (bmap.bottom_face[i]) {
            case SegmentKind::SupplyVent: v.at_v(i, 0) = u1; break;
            case SegmentKind::ReturnVent:
                if (full) v.at_v(i, 0) = v.at_v(i, 1);
                return_len += g.dx;
                break;
            default: v.at_v(i, 0) = 0.0; break;
        }
    }
    for (int j = 0; j < g.ny; ++j) {
        switch (bmap.left_face[j]) {
            case SegmentKind::SupplyVent: v.at_u(0, j) = u1; break;
            case SegmentKind::ReturnVent:
                if (full) v.at_u(0, j) = v.at_u(1, j);
                return_len += g.dy;
                break;
            default: v.at_u(0, j) = 0.0; break;
        }
        switch (bmap.right_face[j]) {
            case SegmentKind::SupplyVent: v.at_u(g.nx, j) = -u1; break;
            case SegmentKind::ReturnVent:
                if (full) v.at_u(g.nx, j) = v.at_u(g.nx - 1, j);
                return_len += g.dy;
                break;
            default: v.at_u(g.nx, j) = 0.0; break;
        }
    }

    if (!full) return;

    // Close the global mass balance through the return vent so the pressure
    // system stays compatible.
    double q = net_boundary_outflux(v);
    if (return_len == 0.0) {
        if (std::abs(q) > 1e-12)
            throw NumericalError(
                "apply_velocity_bc: nonzero supply inflow with no return vent cannot satisfy "
                "incompressibility");
        return;
    }
    double corr = -q / return_len; // added to the outward component of each return face
    for (int i = 0; i < g.nx; ++i) {
        if (bmap.top_face[i] == SegmentKind::ReturnVent) v.at_v(i, g.ny) += corr;
        if (bmap.bottom_face[i] == SegmentKind::ReturnVent) v.at_v(i, 0) -= corr;
    }
    for (int j = 0; j < g.ny; ++j) {
        if (bmap.left_face[j] == SegmentKind::ReturnVent) v.at_u(0, j) -= corr;
        if (bmap.right_face[j] == SegmentKind::ReturnVent) v.at_u(g.nx, j) += corr;
    }
}

VectorField advect_velocity(const VectorField& v, double dt) {
    const Grid& g = v.grid;
    VectorField out = v;

    // Backtraces run in lattice coordinates, so a zero velocity reproduces
    // every node exactly.
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 1; i < g.nx; ++i) {
            double vel_x = v.at_u(i, j);
            double vel_y = v_stencil(g, i - 0.5, j + 0.5).value(v.v);
            LinStencil s = u_stencil(g, i - dt * vel_x / g.dx, j - dt * vel_y / g.dy);
            out.at_u(i, j) = s.value(v.u);
        }
    }
    for (int j = 1; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            double vel_x = u_stencil(g, i + 0.5, j - 0.5).value(v.u);
            double vel_y = v.at_v(i, j);
            LinStencil s = v_stencil(g, i - dt * vel_x / g.dx, j - dt * vel_y / g.dy);
            out.at_v(i, j) = s.value(v.v);
        }
    }
    return out;
}

namespace {

// Ghost reflection sign for tangential velocity across a wall: zero-gradient
// across the return vent, no-slip everywhere else.
inline double ghost_sign(const BoundaryMap& bmap, Side side, double coord) {
    return bmap.side_kind_at(side, coord) == SegmentKind::ReturnVent ? 1.0 : -1.0;
}

} // namespace

double u_laplacian(const VectorField& v, const BoundaryMap& bmap, int i, int j) {
    const Grid& g = v.grid;
    double c = v.at_u(i, j);
    double w = v.at_u(i - 1, j);
    double e = v.at_u(i + 1, j);
    double s = (j > 0) ? v.at_u(i, j - 1) : ghost_sign(bmap, Side::Bottom, g.u_x(i)) * c;
    double n = (j < g.ny - 1) ? v.at_u(i, j + 1) : ghost_sign(bmap, Side::Top, g.u_x(i)) * c;
    return (w - 2 * c + e) / (g.dx * g.dx) + (s - 2 * c + n) / (g.dy * g.dy);
}

double v_laplacian(const VectorField& v, const BoundaryMap& bmap, int i, int j) {
    const Grid& g = v.grid;
    double c = v.at_v(i, j);
    double s = v.at_v(i, j - 1);
    double n = v.at_v(i, j + 1);
    double w = (i > 0) ? v.at_v(i - 1, j) : ghost_sign(bmap, Side::Left, g.v_y(j)) * c;
    double e = (i < g.nx - 1) ? v.at_v(i + 1, j) : ghost_sign(bmap, Side::Right, g.v_y(j)) * c;
    return (w - 2 * c + e) / (g.dx * g.dx) + (s - 2 * c + n) / (g.dy * g.dy);
}

VectorField diffuse_velocity(const VectorField& v, const BoundaryMap& bmap, double nu, double dt) {
    if (nu < 0.0) throw std::invalid_argument("diffuse_velocity: nu must be non-negative");
    const Grid& g = v.grid;
    double stab = nu * dt * (1.0 / (g.dx * g.dx) + 1.0 / (g.dy * g.dy));
    if (stab > 0.25)
        throw NumericalError("diffuse_velocity: explicit stability violated (nu*dt*(1/dx^2+1/dy^2) = " +
                             std::to_string(stab) + " > 0.25); reduce dt_solver");
    if (nu == 0.0) return v;

    VectorField out = v;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i)
            out.at_u(i, j) = v.at_u(i, j) + nu * dt * u_laplacian(v, bmap, i, j);
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            out.at_v(i, j) = v.at_v(i, j) + nu * dt * v_laplacian(v, bmap, i, j);
    return out;
}

void add_gravity(VectorField& v, double dt) {
    const Grid& g = v.grid;
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) v.at_v(i, j) += kGravity * dt;
}

ScalarField divergence(const VectorField& v) {
    const Grid& g = v.grid;
    ScalarField d(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            d(i, j) = (v.at_u(i + 1, j) - v.at_u(i, j)) / g.dx +
                      (v.at_v(i, j + 1) - v.at_v(i, j)) / g.dy;
    return d;
}

double max_divergence(const VectorField& v) {
    ScalarField d = divergence(v);
    double m = 0.0;
    for (double x : d.values) m = std::max(m, std::abs(x));
    return m;
}

namespace {

// Negative five-point Neumann Laplacian (positive semidefinite).
void apply_neg_laplacian(const ScalarField& p, ScalarField& out) {
    const Grid& g = p.grid;
    const double ax = 1.0 / (g.dx * g.dx), ay = 1.0 / (g.dy * g.dy);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            double c = p(i, j);
            double acc = 0.0;
            if (i > 0) acc += ax * (c - p(i - 1, j));
            if (i < g.nx - 1) acc += ax * (c - p(i + 1, j));
            if (j > 0) acc += ay * (c - p(i, j - 1));
            if (j < g.ny - 1) acc += ay * (c - p(i, j + 1));
            out(i, j) = acc;
        }
    }
}

void subtract_mean(std::vector<double>& x) {
    double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    for (double& e : x) e -= m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double max_abs(const std::vector<double>& a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
}

} // namespace

ScalarField solve_poisson_neumann(const ScalarField& rhs, const NsSettings& settings,
                                  int* iterations, double* residual) {
    const Grid& g = rhs.grid;
    ScalarField x(g), r(g), p(g), ap(g);

    // Solve (-lap) x = -rhs in the mean-zero subspace.
    for (size_t k = 0; k < rhs.values.size(); ++k) r.values[k] = -rhs.values[k];
    subtract_mean(r.values);

    double tol = settings.poisson_tol * std::max(1.0, max_abs(r.values));
    double rnorm = max_abs(r.values);
    if (rnorm <= tol) {
        if (iterations) *iterations = 0;
        if (residual) *residual = rnorm;
        return x;
    }

    p = r;
    double rs = dot(r.values, r.values);
    int it = 0;
    for (; it < settings.poisson_max_iter; ++it) {
        apply_neg_laplacian(p, ap);
        double pap = dot(p.values, ap.values);
        if (pap <= 0.0) break; // numerically exhausted search direction
        double alpha = rs / pap;
        for (size_t k = 0; k < x.values.size(); ++k) {
            x.values[k] += alpha * p.values[k];
            r.values[k] -= alpha * ap.values[k];
        }
        if ((it + 1) % 32 == 0) subtract_mean(r.values);
        rnorm = max_abs(r.values);
        if (rnorm <= tol) {
            ++it;
            break;
        }
        double rs_new = dot(r.values, r.values);
        double beta = rs_new / rs;
        rs = rs_new;
        for (size_t k = 0; k < p.values.size(); ++k) p.values[k] = r.values[k] + beta * p.values[k];
    }

    if (rnorm > tol)
        throw NumericalError("pressure Poisson solve did not converge after " +
                             std::to_string(settings.poisson_max_iter) +
                             " iterations (residual " + std::to_string(rnorm) + ")");

    subtract_mean(x.values);
    if (iterations) *iterations = it;
    if (residual) *residual = rnorm;
    return x;
}

ProjectionResult project(const VectorField& v, const BoundaryMap& bmap,
                         const NsSettings& settings) {
    (void)bmap; // boundary faces pass through untouched
    const Grid& g = v.grid;
    ScalarField div = divergence(v);

    ProjectionResult res;
    res.velocity = v;
    ScalarField phi = solve_poisson_neumann(div, settings, &res.iterations, &res.residual);

    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i)
            res.velocity.at_u(i, j) -= (phi(i, j) - phi(i - 1, j)) / g.dx;
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            res.velocity.at_v(i, j) -= (phi(i, j) - phi(i, j - 1)) / g.dy;

    res.pressure = phi;
    double scale = settings.rho / settings.dt_solver;
    for (double& x : res.pressure.values) x *= scale;
    return res;
}

VectorField ns_step(const VectorField& v, double u1, const NsSettings& settings,
                    const BoundaryMap& bmap, NsStepDiagnostics* diag, ScalarField* pressure_out) {
    const Grid& g = v.grid;
    const double dt = settings.dt_solver;

    VectorField w = v;
    apply_velocity_bc(w, bmap, u1, VelocityBcMode::Full);
    w = advect_velocity(w, dt);
    w = diffuse_velocity(w, bmap, settings.nu, dt);
    add_gravity(w, dt);
    ProjectionResult pr = project(w, bmap, settings);
    w = std::move(pr.velocity);
    apply_velocity_bc(w, bmap, u1, VelocityBcMode::DirichletOnly);

    if (!w.all_finite()) throw NumericalError("ns_step produced non-finite velocity");
    if (diag) {
        diag->cfl = w.max_abs() * dt / std::min(g.dx, g.dy);
        diag->max_div = max_divergence(w);
        diag->poisson_iterations = pr.iterations;
    }
    if (pressure_out) *pressure_out = std::move(pr.pressure);
    return w;
}

} // namespace ventsim
