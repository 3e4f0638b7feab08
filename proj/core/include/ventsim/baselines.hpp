#pragma once

#include "ventsim/control_opt.hpp"

#include <string>
#include <vector>

namespace ventsim {

/// Lumped RC/mass-balance parameters for the reduced model: zone-mean
/// temperature plus focus-area mean CO2.
struct OdeParams {
    double c = 2.0e4;   ///< heat capacity [J/degC-equivalent]
    double r = 0.05;    ///< thermal resistance
    double c_p = 1000.0;///< specific heat of supply air
    double p_g = 100.0; ///< heat gain per person
    double m = 80.0;    ///< zone air mass
    double alpha = 0.65;///< supply recirculation fraction
    double sigma = 10.0;///< CO2 generation rate per person

    void validate() const;
};

struct OdeState {
    double t_e = 21.0; ///< zone mean temperature [deg C]
    double c = 400.0;  ///< focus-area mean CO2 [ppm]
};

/// Forward-Euler update of the reduced model.
OdeState ode_step(const OdeState& s, double u1, double u2, double headcount, double t_ambient,
                  const OdeParams& p, double dt, double c_fresh);

/// One excitation record for the reduced-model fit: series extracted from a
/// PDE rollout (or generated synthetically) under known controls and
/// disturbances.
struct OdeFitData {
    std::vector<double> mean_t;  ///< zone mean temperature per step
    std::vector<double> focus_c; ///< focus-area mean CO2 per step
    std::vector<double> u1, u2, headcount, ambient;
    double t0 = 0.0, c0 = 0.0;   ///< initial values
    double dt = 60.0;
};

/// Occupancy rectangle dilated by one cell: the default focus area for the
/// reduced CO2 balance.
Rect focus_region(const Scenario& sc);

OdeFitData extract_fit_data(const Trajectory& traj, const Scenario& sc);

struct OdeFitResult {
    OdeParams params;
    double thermal_rms = 0.0; ///< increment-equation residuals
    double co2_rms = 0.0;
};

/// Linear least squares on the state increments. The increments identify
/// the ratios (1/cR, c_p/c, p_g/c) and (alpha/m, sigma/m); c and m are held
/// at the reference values and the remaining parameters recovered from the
/// fitted coefficients. Throws on rank-deficient excitation.
OdeFitResult fit_ode(const std::vector<OdeFitData>& data, const OdeParams& reference,
                     double c_fresh);

/// Barrier-augmented projected descent on the reduced dynamics (analytic
/// gradients); the returned schedule is feasible for the reduced model,
/// never by assumption for the PDE environment.
ControlSchedule ode_control(const Scenario& sc, const OdeParams& p, const ControlConfig& config);

ControlSchedule maxflow_policy(const Scenario& sc);
ControlSchedule minflow_policy(const Scenario& sc);

struct PolicyReport {
    std::string name;
    double energy_proxy = 0.0; ///< exact L1 energy, Eq.-10 weights
    ViolationStats violations;
    double loss_if_feasible = 0.0; ///< barrier loss when defined, else NaN
};

/// Rolls a schedule out on the PDE environment and scores it.
PolicyReport evaluate_policy(const std::string& name, const ControlSchedule& schedule,
                             const Scenario& sc, const ModelParams& params,
                             const ControlConfig& config);

} // namespace ventsim
