#pragma once

#include "ventsim/building_env.hpp"

#include <functional>
#include <vector>

namespace ventsim {

/// Cotangent of a scalar objective with respect to one simulation state.
/// Pressure is re-derived inside every projection and never feeds a loss,
/// so it carries no cotangent.
struct StateCotangent {
    VectorField velocity;
    ScalarField temperature;
    ScalarField co2;

    StateCotangent() = default;
    explicit StateCotangent(const Grid& g)
        : velocity(g), temperature(g, 0.0), co2(g, 0.0) {}

    bool all_finite() const {
        return velocity.all_finite() && temperature.all_finite() && co2.all_finite();
    }
    void accumulate(const StateCotangent& o);
};

struct ControlCotangent {
    double u1 = 0.0;
    double u2 = 0.0;
};

/// Result of reversing one control step: transposed-Jacobian products of
/// the one-step map against the incoming state cotangent.
struct StepVjpResult {
    StateCotangent prev;      ///< contribution to the previous state's cotangent
    ControlCotangent control; ///< contribution to this step's control gradient
    ParamVector params;       ///< contribution to the parameter gradient
};

/// Reverses one control step: recomputes the substep chain from the
/// recorded previous state, then runs each kernel's transpose in reverse
/// order (interpolation scatter, symmetric diffusion stencils, self-adjoint
/// projection, Dirichlet-source accumulation into u1/u2/alpha).
StepVjpResult step_vjp(const State& q_prev, double u1, double u2, double headcount,
                       double t_ambient, const ModelParams& params, const Scenario& sc,
                       const StateCotangent& cot_next);

/// Per-step loss partials feeding the backward sweep. Entry t refers to the
/// state after control step t and to the controls applied at step t.
struct LossPartials {
    std::vector<StateCotangent> dl_dq;
    std::vector<ControlCotangent> dl_du;
};

struct Gradients {
    std::vector<ControlCotangent> controls;
    ParamVector params;
};

/// Backward sweep bookkeeping over one recorded trajectory. Steps must be
/// consumed from the last one down to step 0, each exactly once.
class AdjointTape {
public:
    AdjointTape(const Trajectory& traj, const Scenario& sc, const ModelParams& params);

    int next() const { return cursor_; }
    bool done() const { return cursor_ < 0; }

    /// Reverses step next(); throws std::logic_error when consumed out of
    /// order or twice.
    StepVjpResult reverse_step(const StateCotangent& cot_next);

private:
    const Trajectory& traj_;
    const Scenario& sc_;
    const ModelParams& params_;
    int cursor_;
};

/// Full backward sweep: gradients of the loss with respect to every control
/// pair and all six model parameters.
Gradients backward(const Trajectory& traj, const Scenario& sc, const ModelParams& params,
                   const LossPartials& partials);

struct LossEvaluation {
    double value = 0.0;
    LossPartials partials;
};

using LossFn = std::function<LossEvaluation(const Trajectory&)>;

/// Smooth state-dependent probe objective for gradient verification:
/// random positive weights on temperature/CO2 readings at random interior
/// points plus a quadratic term on the final room-mean CO2.
LossFn make_probe_loss(const Scenario& sc, uint64_t seed);

struct GradCheckDirection {
    double adjoint = 0.0; ///< directional derivative from the backward sweep
    double fd = 0.0;      ///< central finite difference
    double rel_error = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckDirection> directions;
    double max_rel_error = 0.0;
    double median_rel_error = 0.0;
};

/// Randomized directional-derivative comparison between the adjoint
/// gradient and central finite differences over joint (controls, params)
/// perturbations. The schedule should sit strictly inside its bounds so
/// the finite-difference probes stay admissible.
GradCheckReport gradcheck(const Scenario& sc, const ModelParams& params,
                          const ControlSchedule& schedule, const LossFn& loss, int probes,
                          uint64_t seed, double fd_step = 1e-4);

} // namespace ventsim
