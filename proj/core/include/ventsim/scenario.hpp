#pragma once

#include "ventsim/boundary.hpp"
#include "ventsim/grid.hpp"
#include "ventsim/ns_solver.hpp"
#include "ventsim/params.hpp"
#include "ventsim/transport.hpp"

#include <string>
#include <vector>

namespace ventsim {

struct ControlBounds {
    double u1_min = 0.12, u1_max = 1.2; ///< supply airflow [m/s]
    double u2_min = 10.0, u2_max = 30.0; ///< supply temperature [deg C]

    bool contains(double u1, double u2) const {
        return u1 >= u1_min && u1 <= u1_max && u2 >= u2_min && u2 <= u2_max;
    }
    bool operator==(const ControlBounds&) const = default;
};

/// Per-step control pairs with their box bounds.
struct ControlSchedule {
    std::vector<double> u1; ///< supply airflow per control step [m/s]
    std::vector<double> u2; ///< supply temperature per control step [deg C]
    ControlBounds bounds;

    int size() const { return static_cast<int>(u1.size()); }

    static ControlSchedule constant(int steps, double u1_val, double u2_val,
                                    const ControlBounds& b);
    void validate() const;
};

struct Sensor {
    std::string name;
    std::vector<std::pair<double, double>> points; ///< (x, y) in meters

    bool operator==(const Sensor&) const = default;
};

struct StateConstraints {
    double c_max = 1200.0; ///< everywhere-limit on CO2 [ppm]
    double t_min = 21.0;   ///< lower bound for the room-mean temperature
    double t_max = 22.0;

    bool operator==(const StateConstraints&) const = default;
};

/// Room geometry, disturbances, sensors and solver settings for one
/// experiment. Disturbances are piecewise-constant per control step.
struct Scenario {
    int schema_version = 1;
    std::string name;
    std::string note;

    Grid grid;
    std::vector<BoundarySegment> segments;
    BoundaryMap bmap; // derived from segments

    Rect occupancy_region;
    OccupancyField occupancy; // derived
    std::vector<double> headcount; ///< persons per control step (size = horizon)
    std::vector<double> ambient;   ///< outside-wall temperature per step [deg C]

    double c_fresh = 400.0;
    double init_temperature = 21.5;
    double init_co2 = 400.0;

    double dt_control = 60.0; ///< control interval [s]
    int horizon = 60;         ///< number of control steps

    NsSettings solver; ///< nu is taken from ModelParams at run time
    std::vector<Sensor> sensors;
    StateConstraints constraints;
    ControlBounds control_bounds;

    ModelParams default_params; ///< generating parameters for synthetic fixtures

    int substeps() const;
    double headcount_at(int t) const { return headcount.at(static_cast<size_t>(t)); }
    double ambient_at(int t) const { return ambient.at(static_cast<size_t>(t)); }

    /// Recomputes derived members and checks every invariant; throws
    /// ConfigError naming the offending quantity.
    void finalize();
};

} // namespace ventsim
