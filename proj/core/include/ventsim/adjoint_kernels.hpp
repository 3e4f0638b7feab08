#pragma once

#include "ventsim/boundary.hpp"
#include "ventsim/field.hpp"
#include "ventsim/ns_solver.hpp"
#include "ventsim/transport.hpp"

namespace ventsim {

// Per-kernel transposes of the forward solvers. Each consumes the cotangent
// of a kernel's output (in place) and leaves the cotangent of its input,
// accumulating source terms into control/parameter gradients. step_vjp
// composes them; they are exposed so the transpose identities can be tested
// kernel by kernel.

void reverse_temperature_bc(ScalarField& cot, const BoundaryMap& bmap, double& grad_u2);

/// `mean_used` is the room mean consumed by the forward application.
void reverse_co2_bc(ScalarField& cot, const BoundaryMap& bmap, double alpha, double c_fresh,
                    double mean_used, double& grad_alpha);

void reverse_diffuse_scalar(ScalarField& cot, const ScalarField& input, const BoundaryMap& bmap,
                            ScalarRole role, double k, double dt, double& grad_k);

/// Scatter transpose of the interpolation plus the backtrace-position
/// coupling into the velocity cotangent.
void reverse_advect_scalar(ScalarField& cot, const ScalarField& input, const VectorField& vel,
                           double dt, VectorField& cot_v);

void reverse_advect_velocity(VectorField& cot, const VectorField& input, double dt);

void reverse_diffuse_velocity(VectorField& cot, const VectorField& input, const BoundaryMap& bmap,
                              double nu, double dt, double& grad_nu);

/// Projection of the co-state (the projector is self-adjoint) plus the
/// adjoint-pressure routing into boundary faces.
void reverse_project(VectorField& cot, const BoundaryMap& bmap, const NsSettings& settings);

void reverse_velocity_bc(VectorField& cot, const BoundaryMap& bmap, VelocityBcMode mode,
                         double& grad_u1);

} // namespace ventsim
