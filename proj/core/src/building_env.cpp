#include "ventsim/building_env.hpp"

#include "ventsim/errors.hpp"
#include "ventsim/interp.hpp"

#include <cmath>

namespace ventsim {

State make_initial_state(const Scenario& sc) {
    State q;
    q.velocity = VectorField(sc.grid);
    q.temperature = ScalarField(sc.grid, sc.init_temperature);
    q.co2 = ScalarField(sc.grid, sc.init_co2);
    q.pressure = ScalarField(sc.grid, 0.0);
    return q;
}

State step(const State& q_prev, double u1, double u2, double headcount, double t_ambient,
           const ModelParams& params, const Scenario& sc, StepDiagnostics* diag) {
    if (!sc.control_bounds.contains(u1, u2))
        throw ConfigError("step: control (u1=" + std::to_string(u1) + ", u2=" + std::to_string(u2) +
                          ") violates the scenario bounds");
    if (!q_prev.all_finite()) throw NumericalError("step: non-finite input state");

    NsSettings settings = sc.solver;
    settings.nu = params.nu;

    State q = q_prev;
    StepDiagnostics agg;
    const int n = sc.substeps();
    for (int s = 0; s < n; ++s) {
        NsStepDiagnostics nd;
        q.velocity = ns_step(q.velocity, u1, settings, sc.bmap, &nd, &q.pressure);
        transport_step(q.temperature, q.co2, q.velocity, sc.bmap, sc.occupancy, params, u2,
                       headcount, t_ambient, sc.c_fresh, settings.dt_solver);
        agg.max_div = std::max(agg.max_div, nd.max_div);
        agg.cfl = std::max(agg.cfl, nd.cfl);
        agg.poisson_iterations = std::max(agg.poisson_iterations, nd.poisson_iterations);
    }
    if (!q.all_finite()) throw NumericalError("step: produced non-finite state");
    if (diag) *diag = agg;
    return q;
}

Trajectory rollout(const ControlSchedule& schedule, const Scenario& sc,
                   const ModelParams& params) {
    schedule.validate();
    if (schedule.size() > sc.horizon)
        throw ConfigError("rollout: schedule length " + std::to_string(schedule.size()) +
                          " exceeds the scenario horizon " + std::to_string(sc.horizon));

    Trajectory traj;
    traj.schedule = schedule;
    traj.states.reserve(static_cast<size_t>(schedule.size()) + 1);
    traj.states.push_back(make_initial_state(sc));

    for (int t = 0; t < schedule.size(); ++t) {
        StepDiagnostics d;
        try {
            traj.states.push_back(step(traj.states.back(), schedule.u1[t], schedule.u2[t],
                                       sc.headcount_at(t), sc.ambient_at(t), params, sc, &d));
        } catch (const NumericalError& e) {
            throw NumericalError("rollout: step " + std::to_string(t) + ": " + e.what());
        }
        traj.headcount.push_back(sc.headcount_at(t));
        traj.ambient.push_back(sc.ambient_at(t));
        traj.diagnostics.push_back(d);
    }
    return traj;
}

double sample_sensor_value(const ScalarField& f, const Sensor& s) {
    double acc = 0.0;
    for (auto [x, y] : s.points) acc += sample_cell(f, x, y);
    return acc / static_cast<double>(s.points.size());
}

SensorSeries sample_sensors(const Trajectory& traj, const std::vector<Sensor>& sensors) {
    SensorSeries out;
    const int n = traj.steps();
    for (const auto& s : sensors) {
        out.names.push_back(s.name);
        std::vector<double> ts(static_cast<size_t>(n)), cs(static_cast<size_t>(n));
        for (int t = 0; t < n; ++t) {
            ts[t] = sample_sensor_value(traj.state_after(t).temperature, s);
            cs[t] = sample_sensor_value(traj.state_after(t).co2, s);
        }
        out.temperature.push_back(std::move(ts));
        out.co2.push_back(std::move(cs));
    }
    return out;
}

} // namespace ventsim
