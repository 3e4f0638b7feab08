#include "ventsim/scenario.hpp"

#include "ventsim/errors.hpp"

#include <cmath>

namespace ventsim {

ControlSchedule ControlSchedule::constant(int steps, double u1_val, double u2_val,
                                          const ControlBounds& b) {
    ControlSchedule s;
    s.bounds = b;
    s.u1.assign(static_cast<size_t>(steps), u1_val);
    s.u2.assign(static_cast<size_t>(steps), u2_val);
    s.validate();
    return s;
}

void ControlSchedule::validate() const {
    if (u1.size() != u2.size()) throw ConfigError("ControlSchedule: u1/u2 length mismatch");
    if (bounds.u1_min > bounds.u1_max || bounds.u2_min > bounds.u2_max)
        throw ConfigError("ControlSchedule: inverted control bounds");
    for (size_t t = 0; t < u1.size(); ++t) {
        if (!bounds.contains(u1[t], u2[t]))
            throw ConfigError("ControlSchedule: control at step " + std::to_string(t) +
                              " (u1=" + std::to_string(u1[t]) + ", u2=" + std::to_string(u2[t]) +
                              ") violates bounds");
    }
}

int Scenario::substeps() const {
    double ratio = dt_control / solver.dt_solver;
    int n = static_cast<int>(std::lround(ratio));
    if (n < 1 || std::abs(ratio - n) > 1e-9 * ratio)
        throw ConfigError("Scenario: dt_control (" + std::to_string(dt_control) +
                          ") must be a positive multiple of dt_solver (" +
                          std::to_string(solver.dt_solver) + ")");
    return n;
}

void Scenario::finalize() {
    grid = make_grid(grid.lx, grid.ly, grid.nx, grid.ny);
    bmap = classify_boundary(grid, segments);
    occupancy = OccupancyField::build(grid, occupancy_region);
    solver.validate();
    default_params.validate();
    (void)substeps();

    if (horizon < 1) throw ConfigError("Scenario.horizon: must be >= 1");
    if (c_fresh < 0.0) throw ConfigError("Scenario.c_fresh: must be non-negative");
    if (init_co2 < 0.0) throw ConfigError("Scenario.initial.co2: must be non-negative");

    if (headcount.size() == 1) headcount.assign(static_cast<size_t>(horizon), headcount[0]);
    if (ambient.size() == 1) ambient.assign(static_cast<size_t>(horizon), ambient[0]);
    if (static_cast<int>(headcount.size()) != horizon)
        throw ConfigError("Scenario.occupancy.headcount: expected " + std::to_string(horizon) +
                          " entries, got " + std::to_string(headcount.size()));
    if (static_cast<int>(ambient.size()) != horizon)
        throw ConfigError("Scenario.ambient: expected " + std::to_string(horizon) +
                          " entries, got " + std::to_string(ambient.size()));

    bool any_occupants = false;
    for (double h : headcount) {
        if (h < 0.0) throw ConfigError("Scenario.occupancy.headcount: negative entry");
        any_occupants = any_occupants || h > 0.0;
    }
    if (any_occupants && occupancy.cells.empty())
        throw ConfigError("Scenario.occupancy.region: contains no grid cells but headcount > 0");

    for (const auto& s : sensors) {
        if (s.points.empty())
            throw ConfigError("Scenario.sensors." + s.name + ": needs at least one point");
        for (auto [x, y] : s.points)
            if (!grid.contains(x, y))
                throw ConfigError("Scenario.sensors." + s.name + ": point (" + std::to_string(x) +
                                  ", " + std::to_string(y) + ") lies outside the room");
    }

    if (constraints.t_min >= constraints.t_max)
        throw ConfigError("Scenario.constraints: t_min must be below t_max");
    if (constraints.c_max <= 0.0) throw ConfigError("Scenario.constraints.c_max: must be positive");

    if (control_bounds.u1_min < 0.0)
        throw ConfigError("Scenario.controls.u1_min: must be non-negative");
    if (control_bounds.u1_min > control_bounds.u1_max ||
        control_bounds.u2_min > control_bounds.u2_max)
        throw ConfigError("Scenario.controls: inverted bounds");

    if (bmap.has_supply() && !bmap.has_return())
        throw ConfigError("Scenario.boundary: a supply vent requires a return vent for mass balance");
}

} // namespace ventsim
