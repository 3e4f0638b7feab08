#include "ventsim/control_opt.hpp"

#include "ventsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace ventsim {

double proj(double x, double a, double b) {
    if (a > b) throw std::invalid_argument("proj: interval is inverted");
    if (x < a) return a;
    if (x > b) return b;
    return x;
}

double softmax_lse(const ScalarField& f, double beta) {
    double m = max_value(f);
    double acc = 0.0;
    for (double x : f.values) acc += std::exp(beta * (x - m));
    return m + std::log(acc / static_cast<double>(f.values.size())) / beta;
}

namespace {

// Smoothed absolute value, zero at zero.
inline double sabs(double x, double eps) { return std::sqrt(x * x + eps * eps) - eps; }
inline double sabs_d(double x, double eps) { return x / std::sqrt(x * x + eps * eps); }

// Single implementation of the barrier loss; partials are filled only when
// requested. Returns false (with bd describing the first violation) instead
// of accumulating past an infeasible step.
bool eval_control_loss(const Trajectory& traj, const ControlSchedule& schedule,
                       const ControlConfig& config, const Scenario& sc, LossEvaluation* ev,
                       ControlLossBreakdown& bd) {
    const int n = traj.steps();
    const double dt = sc.dt_control;
    const StateConstraints& lim = sc.constraints;
    const int ncells = sc.grid.cell_count();

    if (ev) {
        ev->value = 0.0;
        ev->partials.dl_dq.assign(static_cast<size_t>(n), StateCotangent(sc.grid));
        ev->partials.dl_du.assign(static_cast<size_t>(n), ControlCotangent{});
    }
    bd = ControlLossBreakdown{};

    for (int t = 0; t < n; ++t) {
        const State& q = traj.state_after(t);

        double m = max_value(q.co2);
        double expsum = 0.0;
        for (double x : q.co2.values) expsum += std::exp(config.beta * (x - m));
        double lse = m + std::log(expsum / ncells) / config.beta;
        double margin_c = lim.c_max - lse;
        double mt = mean(q.temperature);
        double margin_hi = lim.t_max - mt;
        double margin_lo = mt - lim.t_min;

        if (margin_c <= 0.0 || margin_hi <= 0.0 || margin_lo <= 0.0) {
            bd.barrier_feasible = false;
            bd.first_violation_step = t;
            bd.violated_constraint = margin_c <= 0.0   ? "co2 soft-max >= c_max"
                                     : margin_hi <= 0.0 ? "mean temperature >= t_max"
                                                        : "mean temperature <= t_min";
            return false;
        }

        bd.barrier += dt * (-config.alpha1 * std::log(margin_c) -
                            config.alpha2 * std::log(margin_hi) -
                            config.alpha2 * std::log(margin_lo));

        double e1 = schedule.u1[t], e2 = schedule.u2[t] - config.u2_default;
        bd.energy_smoothed += dt * (config.w1 * sabs(e1, config.eps_l1) +
                                    config.w2 * sabs(e2, config.eps_l1));
        bd.energy_exact += dt * (config.w1 * std::abs(e1) + config.w2 * std::abs(e2));

        double d1 = 0.0, d2 = 0.0;
        if (t > 0) {
            d1 = schedule.u1[t] - schedule.u1[t - 1];
            d2 = schedule.u2[t] - schedule.u2[t - 1];
            bd.smoothness += config.alpha3 * (sabs(d1, config.eps_l1) + sabs(d2, config.eps_l1));
        }

        if (ev) {
            StateCotangent& dq = ev->partials.dl_dq[static_cast<size_t>(t)];
            double co2_coef = dt * config.alpha1 / margin_c;
            for (size_t k = 0; k < q.co2.values.size(); ++k) {
                double w = std::exp(config.beta * (q.co2.values[k] - m)) / expsum;
                dq.co2.values[k] += co2_coef * w;
            }
            double t_coef = dt * config.alpha2 * (1.0 / margin_hi - 1.0 / margin_lo) / ncells;
            for (double& x : dq.temperature.values) x += t_coef;

            ev->partials.dl_du[t].u1 += dt * config.w1 * sabs_d(e1, config.eps_l1);
            ev->partials.dl_du[t].u2 += dt * config.w2 * sabs_d(e2, config.eps_l1);
            if (t > 0) {
                double g1 = config.alpha3 * sabs_d(d1, config.eps_l1);
                double g2 = config.alpha3 * sabs_d(d2, config.eps_l1);
                ev->partials.dl_du[t].u1 += g1;
                ev->partials.dl_du[t].u2 += g2;
                ev->partials.dl_du[t - 1].u1 -= g1;
                ev->partials.dl_du[t - 1].u2 -= g2;
            }
        }
    }

    bd.total = bd.energy_smoothed + bd.barrier + bd.smoothness;
    if (ev) ev->value = bd.total;
    return true;
}

} // namespace

ControlLossBreakdown control_loss_breakdown(const Trajectory& traj,
                                            const ControlSchedule& schedule,
                                            const ControlConfig& config, const Scenario& sc) {
    ControlLossBreakdown bd;
    eval_control_loss(traj, schedule, config, sc, nullptr, bd);
    return bd;
}

LossEvaluation control_loss(const Trajectory& traj, const ControlSchedule& schedule,
                            const ControlConfig& config, const Scenario& sc,
                            ControlLossBreakdown* breakdown) {
    if (schedule.size() != traj.steps())
        throw std::invalid_argument("control_loss: schedule/trajectory length mismatch");
    LossEvaluation ev;
    ControlLossBreakdown bd;
    if (!eval_control_loss(traj, schedule, config, sc, &ev, bd))
        throw NumericalError("control_loss: trajectory violates '" + bd.violated_constraint +
                             "' at step " + std::to_string(bd.first_violation_step));
    if (breakdown) *breakdown = bd;
    return ev;
}

ViolationStats compute_violations(const Trajectory& traj, const StateConstraints& limits) {
    ViolationStats st;
    const int n = traj.steps();
    if (n == 0) return st;
    for (int t = 0; t < n; ++t) {
        const State& q = traj.state_after(t);
        double vc = std::max(0.0, max_value(q.co2) - limits.c_max);
        double mt = mean(q.temperature);
        double vt = std::max({0.0, limits.t_min - mt, mt - limits.t_max});
        st.co2_avg += vc;
        st.temp_avg += vt;
        st.co2_max = std::max(st.co2_max, vc);
        st.temp_max = std::max(st.temp_max, vt);
        if (vc > 0.0 || vt > 0.0) ++st.violating_steps;
    }
    st.co2_avg /= n;
    st.temp_avg /= n;
    return st;
}

ControlOptResult optimize(const Scenario& sc, const ModelParams& params,
                          const ControlConfig& config) {
    const int n = sc.horizon;
    ControlSchedule current;
    if (config.warm_start) {
        current = *config.warm_start;
        if (current.size() != n)
            throw ConfigError("optimize: warm-start schedule does not cover the horizon");
    } else {
        current = ControlSchedule::constant(n, sc.control_bounds.u1_max, sc.constraints.t_min,
                                            sc.control_bounds);
    }
    current.validate();

    Trajectory traj = rollout(current, sc, params);
    ControlLossBreakdown bd;
    LossEvaluation ev;
    if (!eval_control_loss(traj, current, config, sc, &ev, bd))
        throw ConfigError("optimize: warm start violates '" + bd.violated_constraint +
                          "' at step " + std::to_string(bd.first_violation_step) +
                          "; provide a strictly feasible schedule");

    ControlOptResult res;
    res.schedule = current;
    res.initial_loss = ev.value;
    res.loss_history.push_back(ev.value);
    res.best_breakdown = bd;
    res.best_violations = compute_violations(traj, sc.constraints);
    double best_loss = ev.value;
    bool have_feasible_best = res.best_violations.clean();

    const double r1 = sc.control_bounds.u1_max - sc.control_bounds.u1_min;
    const double r2 = sc.control_bounds.u2_max - sc.control_bounds.u2_min;
    double lr = config.lr;

    for (int it = 0; it < config.iterations; ++it) {
        Gradients grads = backward(traj, sc, params, ev.partials);

        // Normalized steepest descent in box coordinates; the projection
        // keeps every iterate inside the control box exactly.
        double gnorm = 0.0;
        for (int t = 0; t < n; ++t) {
            gnorm = std::max(gnorm, std::abs(grads.controls[t].u1 * r1));
            gnorm = std::max(gnorm, std::abs(grads.controls[t].u2 * r2));
        }
        if (gnorm == 0.0) break;

        double step = lr;
        bool accepted = false;
        for (int halvings = 0; halvings <= config.max_halvings; ++halvings) {
            ControlSchedule cand = current;
            for (int t = 0; t < n; ++t) {
                cand.u1[t] = proj(current.u1[t] - step * r1 * (grads.controls[t].u1 * r1) / gnorm,
                                  sc.control_bounds.u1_min, sc.control_bounds.u1_max);
                cand.u2[t] = proj(current.u2[t] - step * r2 * (grads.controls[t].u2 * r2) / gnorm,
                                  sc.control_bounds.u2_min, sc.control_bounds.u2_max);
            }
            Trajectory cand_traj = rollout(cand, sc, params);
            ControlLossBreakdown cand_bd;
            LossEvaluation cand_ev;
            if (!eval_control_loss(cand_traj, cand, config, sc, &cand_ev, cand_bd) ||
                cand_ev.value >= ev.value) {
                step *= 0.5;
                continue;
            }
            current = std::move(cand);
            traj = std::move(cand_traj);
            ev = std::move(cand_ev);
            bd = cand_bd;
            accepted = true;
            break;
        }
        if (!accepted) {
            res.iterations_run = it;
            break;
        }

        lr = std::min(step * config.growth, config.lr * 10.0);
        res.loss_history.push_back(ev.value);
        res.iterations_run = it + 1;

        ViolationStats vs = compute_violations(traj, sc.constraints);
        if (ev.value < best_loss && (vs.clean() || !have_feasible_best)) {
            best_loss = ev.value;
            res.schedule = current;
            res.best_breakdown = bd;
            res.best_violations = vs;
            have_feasible_best = have_feasible_best || vs.clean();
        }

        if (config.report_every > 0 && (it + 1) % config.report_every == 0)
            std::cerr << "optimize: iteration " << (it + 1) << " loss " << ev.value << "\n";
    }

    res.final_loss = best_loss;
    return res;
}

} // namespace ventsim
