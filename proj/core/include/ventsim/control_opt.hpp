#pragma once

#include "ventsim/adjoint.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ventsim {

struct ControlConfig {
    int iterations = 200;
    double lr = 0.01; ///< step in box-normalized control coordinates
    double alpha1 = 0.1; ///< CO2 barrier weight
    double alpha2 = 0.2; ///< temperature barrier weight
    double alpha3 = 0.5; ///< control smoothness weight
    double w1 = 30.0;    ///< airflow energy weight
    double w2 = 3.0;     ///< supply temperature energy weight
    double u2_default = 14.4; ///< default supply air temperature [deg C]
    double beta = 0.5;        ///< soft-max sharpness [1/ppm]
    double eps_l1 = 1e-3;     ///< smoothing width for |.| in the optimized loss
    int max_halvings = 20;
    double growth = 1.2;
    int report_every = 20; ///< stderr progress cadence; <= 0 silences
    std::optional<ControlSchedule> warm_start; ///< defaults to the max-airflow policy
};

/// Eq.-19-style componentwise clamp.
double proj(double x, double a, double b);

/// Mean-normalized log-sum-exp: underestimates the hard maximum by at most
/// log(N)/beta.
double softmax_lse(const ScalarField& f, double beta);

struct ControlLossBreakdown {
    double total = 0.0;
    double energy_smoothed = 0.0; ///< part of the optimized objective
    double energy_exact = 0.0;    ///< reported proxy (exact L1, same weights)
    double barrier = 0.0;
    double smoothness = 0.0;
    bool barrier_feasible = true; ///< all soft-max barrier arguments positive
    int first_violation_step = -1;
    std::string violated_constraint;
};

/// Barrier-augmented control loss with its state and control partials.
/// Throws when the trajectory is not strictly feasible for the barriers.
LossEvaluation control_loss(const Trajectory& traj, const ControlSchedule& schedule,
                            const ControlConfig& config, const Scenario& sc,
                            ControlLossBreakdown* breakdown = nullptr);

/// Same evaluation but reporting instead of throwing on infeasibility.
ControlLossBreakdown control_loss_breakdown(const Trajectory& traj,
                                            const ControlSchedule& schedule,
                                            const ControlConfig& config, const Scenario& sc);

/// Hard-constraint statistics measured on a rollout (max-cell CO2 against
/// c_max, room-mean temperature against [t_min, t_max]).
struct ViolationStats {
    double co2_avg = 0.0;
    double co2_max = 0.0;
    double temp_avg = 0.0;
    double temp_max = 0.0;
    int violating_steps = 0;

    bool clean() const { return co2_max == 0.0 && temp_max == 0.0; }
};

ViolationStats compute_violations(const Trajectory& traj, const StateConstraints& limits);

struct ControlOptResult {
    ControlSchedule schedule; ///< best hard-feasible accepted iterate
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::vector<double> loss_history; ///< accepted losses, non-increasing
    int iterations_run = 0;
    ControlLossBreakdown best_breakdown;
    ViolationStats best_violations;
};

/// Projected gradient descent on the barrier loss with backtracking and a
/// strictly feasible warm start (max-airflow policy by default).
ControlOptResult optimize(const Scenario& sc, const ModelParams& params,
                          const ControlConfig& config);

} // namespace ventsim
