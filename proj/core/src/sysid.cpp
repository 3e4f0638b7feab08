#include "ventsim/sysid.hpp"

#include "ventsim/errors.hpp"
#include "ventsim/interp.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace ventsim {

ParamBox ParamBox::defaults() {
    ParamBox b;
    // nu, k_te, k_c
    for (int k = 0; k < 3; ++k) {
        b.lo[k] = 1e-5;
        b.hi[k] = 1e-1;
    }
    // alpha
    b.lo[3] = 0.0;
    b.hi[3] = 1.0;
    // alpha_te, alpha_c
    for (int k = 4; k < 6; ++k) {
        b.lo[k] = 0.0;
        b.hi[k] = 10.0;
    }
    return b;
}

ModelParams ParamBox::project(const ModelParams& p) const {
    ModelParams out = p;
    for (int k = 0; k < ModelParams::kCount; ++k)
        out[k] = std::clamp(out[k], lo[k], hi[k]);
    return out;
}

void SensorDataset::validate(const Scenario& sc) const {
    const size_t n = static_cast<size_t>(steps());
    if (n == 0) throw ConfigError("SensorDataset: empty control record");
    if (sensor_names.size() != co2.size())
        throw ConfigError("SensorDataset: sensor_names/co2 length mismatch");
    if (has_temperature() && temperature.size() != co2.size())
        throw ConfigError("SensorDataset: temperature/co2 sensor count mismatch");
    if (sensor_names.size() != sc.sensors.size())
        throw ConfigError("SensorDataset: expected " + std::to_string(sc.sensors.size()) +
                          " sensors per the scenario layout, got " +
                          std::to_string(sensor_names.size()));
    for (size_t s = 0; s < co2.size(); ++s) {
        if (co2[s].size() != n || (has_temperature() && temperature[s].size() != n))
            throw ConfigError("SensorDataset: series length mismatch for sensor " +
                              sensor_names[s]);
        for (double x : co2[s])
            if (!std::isfinite(x)) throw ConfigError("SensorDataset: non-finite CO2 record");
    }
    if (headcount.size() != n || ambient.size() != n)
        throw ConfigError("SensorDataset: disturbance records must cover every step");
}

namespace {

// Scenario clone driven by the dataset's disturbances.
Scenario scenario_for(const SensorDataset& data, const Scenario& sc) {
    Scenario run = sc;
    run.horizon = data.steps();
    run.headcount = data.headcount;
    run.ambient = data.ambient;
    run.finalize();
    return run;
}

} // namespace

SensorDataset synthesize_dataset(const Scenario& sc, const ModelParams& params,
                                 const ControlSchedule& schedule) {
    Trajectory traj = rollout(schedule, sc, params);
    SensorSeries series = sample_sensors(traj, sc.sensors);

    SensorDataset data;
    data.sensor_names = series.names;
    data.temperature = series.temperature;
    data.co2 = series.co2;
    data.controls = schedule;
    data.headcount = traj.headcount;
    data.ambient = traj.ambient;
    return data;
}

double learning_loss(const SensorSeries& predicted, const SensorDataset& measured) {
    if (predicted.sensor_count() != static_cast<int>(measured.co2.size()))
        throw std::invalid_argument("learning_loss: sensor count mismatch");
    double loss = 0.0;
    for (size_t s = 0; s < measured.co2.size(); ++s) {
        if (predicted.co2[s].size() != measured.co2[s].size())
            throw std::invalid_argument("learning_loss: series length mismatch");
        for (size_t t = 0; t < measured.co2[s].size(); ++t) {
            double ec = predicted.co2[s][t] - measured.co2[s][t];
            loss += ec * ec;
            if (measured.has_temperature()) {
                double et = predicted.temperature[s][t] - measured.temperature[s][t];
                loss += et * et;
            }
        }
    }
    return loss;
}

LossEvaluation learning_loss_eval(const Trajectory& traj, const SensorDataset& data,
                                  const Scenario& sc) {
    const Grid& g = sc.grid;
    const int n = traj.steps();
    if (n != data.steps())
        throw std::invalid_argument("learning_loss_eval: trajectory/dataset length mismatch");

    LossEvaluation ev;
    ev.partials.dl_dq.assign(static_cast<size_t>(n), StateCotangent(g));
    ev.partials.dl_du.assign(static_cast<size_t>(n), ControlCotangent{});

    for (size_t s = 0; s < sc.sensors.size(); ++s) {
        const Sensor& sensor = sc.sensors[s];
        const double wpoint = 1.0 / static_cast<double>(sensor.points.size());
        for (int t = 0; t < n; ++t) {
            const State& q = traj.state_after(t);
            StateCotangent& dq = ev.partials.dl_dq[static_cast<size_t>(t)];

            double pred_c = sample_sensor_value(q.co2, sensor);
            double ec = pred_c - data.co2[s][t];
            ev.value += ec * ec;
            for (auto [x, y] : sensor.points) {
                LinStencil st = cell_stencil(g, x / g.dx - 0.5, y / g.dy - 0.5);
                st.scatter(dq.co2.values, 2.0 * ec * wpoint);
            }

            if (data.has_temperature()) {
                double pred_t = sample_sensor_value(q.temperature, sensor);
                double et = pred_t - data.temperature[s][t];
                ev.value += et * et;
                for (auto [x, y] : sensor.points) {
                    LinStencil st = cell_stencil(g, x / g.dx - 0.5, y / g.dy - 0.5);
                    st.scatter(dq.temperature.values, 2.0 * et * wpoint);
                }
            }
        }
    }
    return ev;
}

FitResult fit(const SensorDataset& data, const Scenario& sc, const LearningConfig& config) {
    if (config.epochs < 1) throw ConfigError("LearningConfig.epochs must be >= 1");
    if (config.lr <= 0.0) throw ConfigError("LearningConfig.lr must be positive");
    data.validate(sc);
    Scenario run = scenario_for(data, sc);

    // Normalization scales from the initial guess keep one learning rate
    // meaningful across parameters spanning three orders of magnitude.
    std::array<double, ModelParams::kCount> scale;
    for (int k = 0; k < ModelParams::kCount; ++k)
        scale[k] = std::max(std::abs(config.init[k]), 1e-4);

    ModelParams theta = config.box.project(config.init);
    Trajectory traj = rollout(data.controls, run, theta);
    LossEvaluation ev = learning_loss_eval(traj, data, run);

    FitResult res;
    res.initial_loss = ev.value;
    res.loss_history.push_back(ev.value);
    res.param_history.push_back(theta);
    res.params = theta;
    double best_loss = ev.value;

    double lr = config.lr;
    int bad_epochs = 0;
    std::array<double, ModelParams::kCount> m1{}, m2{}; // adaptive-moment state

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Gradients grads = backward(traj, run, theta, ev.partials);

        std::array<double, ModelParams::kCount> gx;
        double gnorm = 0.0;
        for (int k = 0; k < ModelParams::kCount; ++k) {
            gx[k] = grads.params[k] * scale[k];
            gnorm = std::max(gnorm, std::abs(gx[k]));
        }
        if (gnorm == 0.0) {
            res.epochs_run = epoch;
            break;
        }

        bool accepted = false;
        double step = lr;
        if (config.method == FitMethod::AdaptivePerParameter) {
            // Log coordinates for the strictly positive parameters make
            // the adaptive steps multiplicative and keep them off zero;
            // the recirculation fraction stays linear in [0, 1].
            const double b1 = 0.9, b2 = 0.99, eps = 1e-8, floor = 1e-8;
            ModelParams cand = theta;
            for (int k = 0; k < ModelParams::kCount; ++k) {
                const bool log_coord = (k != 3);
                double g = log_coord ? grads.params[k] * std::max(theta[k], floor)
                                     : grads.params[k];
                m1[k] = b1 * m1[k] + (1 - b1) * g;
                m2[k] = b2 * m2[k] + (1 - b2) * g * g;
                double mh = m1[k] / (1 - std::pow(b1, epoch + 1));
                double vh = m2[k] / (1 - std::pow(b2, epoch + 1));
                double delta = config.lr * mh / (std::sqrt(vh) + eps);
                if (log_coord)
                    cand[k] = std::max(theta[k], floor) * std::exp(-delta);
                else
                    cand[k] = theta[k] - delta;
            }
            theta = config.box.project(cand);
            traj = rollout(data.controls, run, theta);
            ev = learning_loss_eval(traj, data, run);
            accepted = true;
        } else {
            // Normalized steepest descent with optional backtracking.
            for (int halvings = 0; halvings <= config.max_halvings; ++halvings) {
                ModelParams cand = theta;
                for (int k = 0; k < ModelParams::kCount; ++k)
                    cand[k] = theta[k] - step * gx[k] / gnorm * scale[k];
                cand = config.box.project(cand);
                Trajectory cand_traj = rollout(data.controls, run, cand);
                LossEvaluation cand_ev = learning_loss_eval(cand_traj, data, run);
                if (config.backtracking && cand_ev.value >= ev.value &&
                    halvings < config.max_halvings) {
                    step *= 0.5;
                    continue;
                }
                if (config.backtracking && cand_ev.value >= ev.value) break; // exhausted
                theta = cand;
                traj = std::move(cand_traj);
                ev = std::move(cand_ev);
                accepted = true;
                break;
            }
            if (!accepted && config.backtracking) {
                res.epochs_run = epoch;
                break;
            }
            lr = config.backtracking ? std::min(step * config.growth, config.lr * 10.0) : lr;
        }

        res.loss_history.push_back(ev.value);
        res.param_history.push_back(theta);
        if (ev.value < best_loss) {
            best_loss = ev.value;
            res.params = theta;
        }
        res.epochs_run = epoch + 1;

        if (config.report_every > 0 && (epoch + 1) % config.report_every == 0)
            std::cerr << "fit: epoch " << (epoch + 1) << " loss " << ev.value << "\n";

        // Divergence detection.
        bad_epochs = (ev.value > 10.0 * res.initial_loss) ? bad_epochs + 1 : 0;
        if (bad_epochs >= 5)
            throw NumericalError("fit: loss exceeded 10x the initial value for 5 consecutive "
                                 "epochs (last " + std::to_string(ev.value) +
                                 "); reduce the learning rate");
    }

    res.final_loss = best_loss;
    return res;
}

ParamEvaluation evaluate_params(const ModelParams& estimated, const ModelParams& truth) {
    ParamEvaluation ev;
    for (int k = 0; k < ModelParams::kCount; ++k) {
        double d = estimated[k] - truth[k];
        ev.squared_error += d * d;
        ev.rel_error[k] = std::abs(d) / std::max(std::abs(truth[k]), 1e-300);
    }
    return ev;
}

} // namespace ventsim
