#pragma once

#include "ventsim/boundary.hpp"
#include "ventsim/field.hpp"

namespace ventsim {

/// Settings for the incompressible flow stepper.
struct NsSettings {
    double nu = 1.08e-3;        ///< kinematic viscosity [m^2/s]
    double dt_solver = 0.5;     ///< inner solver step [s]
    double poisson_tol = 1e-8;  ///< relative residual tolerance
    int poisson_max_iter = 5000;
    double rho = 1.2;           ///< fluid density [kg/m^3]; dynamically inert

    void validate() const;
};

/// How much of the velocity boundary condition to enforce.
///
/// Full mode sets the supply inflow, copies return-vent faces from the
/// adjacent interior (zero normal gradient) with a uniform flux correction
/// that closes the global mass balance, and zeroes every other boundary
/// face. DirichletOnly re-asserts only supply and wall faces; it is used
/// after the projection so the recorded field keeps its divergence.
enum class VelocityBcMode { Full, DirichletOnly };

void apply_velocity_bc(VectorField& v, const BoundaryMap& bmap, double u1,
                       VelocityBcMode mode = VelocityBcMode::Full);

/// Semi-Lagrangian self-advection: each interior face value is replaced by
/// the field sampled at the backtraced departure point. Unconditionally
/// stable; output extrema are bounded by input extrema per component.
VectorField advect_velocity(const VectorField& v, double dt);

/// Explicit 5-point viscous update on interior faces. Tangential no-slip
/// walls enter through ghost values (-u across solid walls, +u across the
/// return vent). Throws if nu*dt*(1/dx^2 + 1/dy^2) > 0.25.
VectorField diffuse_velocity(const VectorField& v, const BoundaryMap& bmap, double nu, double dt);

/// Adds the constant gravitational acceleration to interior v-faces.
void add_gravity(VectorField& v, double dt);
inline constexpr double kGravity = -9.8; // [m/s^2], y-up

/// Discrete viscous stencils at one interior face, including the wall-ghost
/// treatment. Shared with the reverse-mode kernels.
double u_laplacian(const VectorField& v, const BoundaryMap& bmap, int i, int j);
double v_laplacian(const VectorField& v, const BoundaryMap& bmap, int i, int j);

/// Cell-centered divergence of a MAC field.
ScalarField divergence(const VectorField& v);
double max_divergence(const VectorField& v);

struct ProjectionResult {
    VectorField velocity;
    ScalarField pressure; ///< rho/dt-scaled Poisson solution, diagnostic only
    int iterations = 0;
    double residual = 0.0;
};

/// Pressure projection: solves the pure-Neumann Poisson system with
/// mean-zero deflated conjugate gradients and subtracts the pressure
/// gradient from interior faces. Boundary faces pass through.
ProjectionResult project(const VectorField& v, const BoundaryMap& bmap,
                         const NsSettings& settings);

struct NsStepDiagnostics {
    double cfl = 0.0;
    double max_div = 0.0;
    int poisson_iterations = 0;
};

/// One full flow substep: BCs, advection, diffusion, gravity, projection,
/// Dirichlet re-assertion. Deterministic given its inputs.
VectorField ns_step(const VectorField& v, double u1, const NsSettings& settings,
                    const BoundaryMap& bmap, NsStepDiagnostics* diag = nullptr,
                    ScalarField* pressure_out = nullptr);

/// Solves lap(phi) = rhs with homogeneous Neumann boundaries; phi and the
/// residual are kept orthogonal to constants. Used by the projection and
/// by its reverse-mode counterpart.
ScalarField solve_poisson_neumann(const ScalarField& rhs, const NsSettings& settings,
                                  int* iterations = nullptr, double* residual = nullptr);

} // namespace ventsim
