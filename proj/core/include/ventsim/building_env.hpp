#pragma once

#include "ventsim/scenario.hpp"

#include <string>
#include <vector>

namespace ventsim {

/// Full simulation state at one control step. Pressure is re-derived by
/// every projection and carries no dynamics; it is kept for diagnostics.
struct State {
    VectorField velocity;
    ScalarField temperature;
    ScalarField co2;
    ScalarField pressure;

    bool all_finite() const {
        return velocity.all_finite() && temperature.all_finite() && co2.all_finite() &&
               pressure.all_finite();
    }
};

struct StepDiagnostics {
    double max_div = 0.0; ///< worst post-projection divergence over the substeps
    double cfl = 0.0;     ///< worst CFL number over the substeps
    int poisson_iterations = 0;
};

/// Recorded rollout: states[0] is the initial state, states[k+1] the result
/// of applying control step k. Substep intermediates are not stored; the
/// backward sweep recomputes them from these checkpoints.
struct Trajectory {
    std::vector<State> states;
    ControlSchedule schedule;
    std::vector<double> headcount;
    std::vector<double> ambient;
    std::vector<StepDiagnostics> diagnostics;

    int steps() const { return static_cast<int>(states.size()) - 1; }
    const State& initial() const { return states.front(); }
    const State& terminal() const { return states.back(); }
    /// State after control step t (t = 0..steps()-1).
    const State& state_after(int t) const { return states.at(static_cast<size_t>(t) + 1); }
};

/// Uniform initial state for a scenario: quiescent air at the configured
/// temperature and CO2 level.
State make_initial_state(const Scenario& sc);

/// One control step: substeps() alternations of flow and transport updates.
State step(const State& q_prev, double u1, double u2, double headcount, double t_ambient,
           const ModelParams& params, const Scenario& sc, StepDiagnostics* diag = nullptr);

/// Rolls the schedule out against the scenario's disturbances. The schedule
/// must cover the scenario horizon and respect its bounds; out-of-bounds
/// controls are rejected, never clamped.
Trajectory rollout(const ControlSchedule& schedule, const Scenario& sc, const ModelParams& params);

/// Per-sensor time series sampled from a trajectory at control-step
/// resolution (states after each step). Multi-point sensors are averaged.
struct SensorSeries {
    std::vector<std::string> names;
    std::vector<std::vector<double>> temperature; ///< [sensor][step]
    std::vector<std::vector<double>> co2;         ///< [sensor][step]

    int sensor_count() const { return static_cast<int>(names.size()); }
    int step_count() const { return names.empty() ? 0 : static_cast<int>(temperature[0].size()); }
};

SensorSeries sample_sensors(const Trajectory& traj, const std::vector<Sensor>& sensors);

/// Bilinear sample of a cell-centered field at a point, averaging over a
/// sensor's points.
double sample_sensor_value(const ScalarField& f, const Sensor& s);

} // namespace ventsim
