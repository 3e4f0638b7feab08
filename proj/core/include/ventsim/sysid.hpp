#pragma once

#include "ventsim/adjoint.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace ventsim {

/// Componentwise projection box keeping iterates physically valid.
struct ParamBox {
    std::array<double, ModelParams::kCount> lo{};
    std::array<double, ModelParams::kCount> hi{};

    static ParamBox defaults();
    ModelParams project(const ModelParams& p) const;
};

/// Parameter update rule. Both work on normalized coordinates (theta
/// divided by the initial guess) so a single rate covers coefficients
/// spanning three orders of magnitude. The adaptive rule rescales each
/// coordinate by its gradient history, which copes with the strongly
/// ill-conditioned coupling between the recirculation fraction and the
/// source/diffusion coefficients.
enum class FitMethod { AdaptivePerParameter, PlainDescent };

struct LearningConfig {
    int epochs = 60;
    double lr = 0.05; ///< step in normalized parameter coordinates
    ModelParams init;
    ParamBox box = ParamBox::defaults();
    FitMethod method = FitMethod::AdaptivePerParameter;
    /// PlainDescent only: reject steps that do not decrease the loss,
    /// halving the rate; plain fixed-rate descent when disabled.
    bool backtracking = true;
    int max_halvings = 15;
    double growth = 1.2;
    int report_every = 10; ///< stderr progress cadence; <= 0 silences
};

/// Sensor records together with the controls and disturbances that
/// generated them.
struct SensorDataset {
    std::vector<std::string> sensor_names;
    std::vector<std::vector<double>> temperature; ///< [sensor][t]; may be empty
    std::vector<std::vector<double>> co2;         ///< [sensor][t]
    ControlSchedule controls;
    std::vector<double> headcount;
    std::vector<double> ambient;

    bool has_temperature() const { return !temperature.empty(); }
    int steps() const { return controls.size(); }
    void validate(const Scenario& sc) const;
};

/// Rolls the scenario's default parameters forward and packages the sensor
/// readings as a dataset (synthetic-learning workflow).
SensorDataset synthesize_dataset(const Scenario& sc, const ModelParams& params,
                                 const ControlSchedule& schedule);

/// Sum of squared sensor mismatches over all steps; CO2-only when the
/// dataset carries no temperature records.
double learning_loss(const SensorSeries& predicted, const SensorDataset& measured);

/// Loss plus state partials for the backward sweep.
LossEvaluation learning_loss_eval(const Trajectory& traj, const SensorDataset& data,
                                  const Scenario& sc);

struct FitResult {
    ModelParams params;        ///< best-loss iterate
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::vector<double> loss_history;      ///< accepted loss per epoch (entry 0 = initial)
    std::vector<ModelParams> param_history;
    int epochs_run = 0;
};

/// Projected gradient descent on the sensor-mismatch loss with adjoint
/// gradients. Parameters are normalized by the initial guess internally so
/// one learning rate covers coefficients spanning 1e-3..1.
FitResult fit(const SensorDataset& data, const Scenario& sc, const LearningConfig& config);

struct ParamEvaluation {
    double squared_error = 0.0;
    std::array<double, ModelParams::kCount> rel_error{};
};

ParamEvaluation evaluate_params(const ModelParams& estimated, const ModelParams& truth);

} // namespace ventsim
