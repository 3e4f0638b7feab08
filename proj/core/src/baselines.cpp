#include "ventsim/baselines.hpp"

#include "ventsim/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace ventsim {

void OdeParams::validate() const {
    if (c <= 0 || r <= 0 || c_p <= 0 || p_g <= 0 || m <= 0 || sigma <= 0)
        throw ConfigError("OdeParams: all coefficients must be positive");
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("OdeParams: alpha must lie in [0, 1]");
}

OdeState ode_step(const OdeState& s, double u1, double u2, double headcount, double t_ambient,
                  const OdeParams& p, double dt, double c_fresh) {
    if (dt <= 0.0) throw std::invalid_argument("ode_step: dt must be positive");
    OdeState out;
    out.t_e = s.t_e + dt / p.c *
                          ((t_ambient - s.t_e) / p.r + p.c_p * u1 * (u2 - s.t_e) +
                           p.p_g * headcount);
    out.c = s.c + dt / p.m * (p.alpha * (c_fresh - s.c) * u1 + p.sigma * headcount);
    return out;
}

Rect focus_region(const Scenario& sc) {
    const Grid& g = sc.grid;
    Rect r = sc.occupancy_region;
    r.x0 = std::max(0.0, r.x0 - g.dx);
    r.x1 = std::min(g.lx, r.x1 + g.dx);
    r.y0 = std::max(0.0, r.y0 - g.dy);
    r.y1 = std::min(g.ly, r.y1 + g.dy);
    return r;
}

OdeFitData extract_fit_data(const Trajectory& traj, const Scenario& sc) {
    OdeFitData d;
    d.dt = sc.dt_control;
    OccupancyField focus = OccupancyField::build(sc.grid, focus_region(sc));
    if (focus.cells.empty()) throw ConfigError("extract_fit_data: empty focus region");

    auto focus_mean = [&](const ScalarField& f) {
        double acc = 0.0;
        for (int c : focus.cells) acc += f.values[c];
        return acc / static_cast<double>(focus.cells.size());
    };

    d.t0 = mean(traj.initial().temperature);
    d.c0 = focus_mean(traj.initial().co2);
    for (int t = 0; t < traj.steps(); ++t) {
        const State& q = traj.state_after(t);
        d.mean_t.push_back(mean(q.temperature));
        d.focus_c.push_back(focus_mean(q.co2));
        d.u1.push_back(traj.schedule.u1[t]);
        d.u2.push_back(traj.schedule.u2[t]);
        d.headcount.push_back(traj.headcount[t]);
        d.ambient.push_back(traj.ambient[t]);
    }
    return d;
}

namespace {

// Solves the n x n normal equations by Gaussian elimination with partial
// pivoting; a vanishing pivot signals rank-deficient excitation.
template <size_t N>
std::array<double, N> solve_normal(std::array<std::array<double, N>, N> a,
                                   std::array<double, N> b) {
    for (size_t col = 0; col < N; ++col) {
        size_t piv = col;
        for (size_t r = col + 1; r < N; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-12)
            throw ConfigError("fit_ode: rank-deficient normal equations; provide excitation "
                              "data with more varied controls");
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        for (size_t r = col + 1; r < N; ++r) {
            double f = a[r][col] / a[col][col];
            for (size_t c2 = col; c2 < N; ++c2) a[r][c2] -= f * a[col][c2];
            b[r] -= f * b[col];
        }
    }
    std::array<double, N> x{};
    for (int r = static_cast<int>(N) - 1; r >= 0; --r) {
        double acc = b[r];
        for (size_t c2 = r + 1; c2 < N; ++c2) acc -= a[r][c2] * x[c2];
        x[r] = acc / a[r][r];
    }
    return x;
}

} // namespace

OdeFitResult fit_ode(const std::vector<OdeFitData>& data, const OdeParams& reference,
                     double c_fresh) {
    if (data.empty()) throw ConfigError("fit_ode: empty dataset");
    reference.validate();

    // Thermal increments: dT = b1*(Tamb - T) + b2*u1*(u2 - T) + b3*g.
    std::array<std::array<double, 3>, 3> at{};
    std::array<double, 3> bt{};
    // CO2 increments: dC = g1*u1*(Cf - C) + g2*g.
    std::array<std::array<double, 2>, 2> ac{};
    std::array<double, 2> bc{};
    int samples = 0;

    for (const OdeFitData& d : data) {
        const size_t n = d.mean_t.size();
        if (n == 0 || d.focus_c.size() != n || d.u1.size() != n || d.u2.size() != n ||
            d.headcount.size() != n || d.ambient.size() != n)
            throw ConfigError("fit_ode: inconsistent series lengths");
        double t_prev = d.t0, c_prev = d.c0;
        for (size_t t = 0; t < n; ++t) {
            std::array<double, 3> ft = {d.ambient[t] - t_prev, d.u1[t] * (d.u2[t] - t_prev),
                                        d.headcount[t]};
            double yt = d.mean_t[t] - t_prev;
            for (int r = 0; r < 3; ++r) {
                for (int c2 = 0; c2 < 3; ++c2) at[r][c2] += ft[r] * ft[c2];
                bt[r] += ft[r] * yt;
            }
            std::array<double, 2> fc = {d.u1[t] * (c_fresh - c_prev), d.headcount[t]};
            double yc = d.focus_c[t] - c_prev;
            for (int r = 0; r < 2; ++r) {
                for (int c2 = 0; c2 < 2; ++c2) ac[r][c2] += fc[r] * fc[c2];
                bc[r] += fc[r] * yc;
            }
            t_prev = d.mean_t[t];
            c_prev = d.focus_c[t];
            ++samples;
        }
    }

    std::array<double, 3> beta = solve_normal<3>(at, bt);
    std::array<double, 2> gamma = solve_normal<2>(ac, bc);

    const double dt = data.front().dt;
    OdeFitResult res;
    res.params = reference;
    // c and m stay at the reference values; the ratios are what the data
    // identify.
    res.params.r = dt / (reference.c * beta[0]);
    res.params.c_p = beta[1] * reference.c / dt;
    res.params.p_g = beta[2] * reference.c / dt;
    res.params.alpha = gamma[0] * reference.m / dt;
    res.params.sigma = gamma[1] * reference.m / dt;

    // Increment-space residuals.
    double sst = 0.0, ssc = 0.0;
    for (const OdeFitData& d : data) {
        double t_prev = d.t0, c_prev = d.c0;
        for (size_t t = 0; t < d.mean_t.size(); ++t) {
            double pt = beta[0] * (d.ambient[t] - t_prev) +
                        beta[1] * d.u1[t] * (d.u2[t] - t_prev) + beta[2] * d.headcount[t];
            double pc = gamma[0] * d.u1[t] * (c_fresh - c_prev) + gamma[1] * d.headcount[t];
            double et = (d.mean_t[t] - t_prev) - pt;
            double ec = (d.focus_c[t] - c_prev) - pc;
            sst += et * et;
            ssc += ec * ec;
            t_prev = d.mean_t[t];
            c_prev = d.focus_c[t];
        }
    }
    res.thermal_rms = std::sqrt(sst / samples);
    res.co2_rms = std::sqrt(ssc / samples);
    res.params.validate();
    return res;
}

namespace {

struct OdeRollout {
    std::vector<OdeState> states; // states[0] = initial
};

OdeRollout roll_ode(const Scenario& sc, const OdeParams& p, const ControlSchedule& u) {
    OdeRollout r;
    OdeState s{sc.init_temperature, sc.init_co2};
    r.states.push_back(s);
    for (int t = 0; t < u.size(); ++t) {
        s = ode_step(s, u.u1[t], u.u2[t], sc.headcount_at(t), sc.ambient_at(t), p, sc.dt_control,
                     sc.c_fresh);
        r.states.push_back(s);
    }
    return r;
}

inline double sabs(double x, double eps) { return std::sqrt(x * x + eps * eps) - eps; }
inline double sabs_d(double x, double eps) { return x / std::sqrt(x * x + eps * eps); }

struct OdeLoss {
    double value = std::numeric_limits<double>::infinity();
    std::vector<double> gu1, gu2;
    bool feasible = false;
};

// Barrier objective on the reduced dynamics with an analytic reverse sweep.
OdeLoss ode_loss(const Scenario& sc, const OdeParams& p, const ControlSchedule& u,
                 const ControlConfig& cfg, bool want_grad) {
    const int n = u.size();
    const double dt = sc.dt_control;
    const StateConstraints& lim = sc.constraints;
    OdeRollout r = roll_ode(sc, p, u);

    OdeLoss out;
    out.value = 0.0;
    std::vector<double> dT(static_cast<size_t>(n), 0.0), dC(static_cast<size_t>(n), 0.0);
    for (int t = 0; t < n; ++t) {
        const OdeState& s = r.states[static_cast<size_t>(t) + 1];
        double margin_c = lim.c_max - s.c;
        double margin_hi = lim.t_max - s.t_e;
        double margin_lo = s.t_e - lim.t_min;
        if (margin_c <= 0.0 || margin_hi <= 0.0 || margin_lo <= 0.0) return out; // infeasible
        out.value += dt * (cfg.w1 * sabs(u.u1[t], cfg.eps_l1) +
                           cfg.w2 * sabs(u.u2[t] - cfg.u2_default, cfg.eps_l1));
        out.value += dt * (-cfg.alpha1 * std::log(margin_c) - cfg.alpha2 * std::log(margin_hi) -
                           cfg.alpha2 * std::log(margin_lo));
        dC[t] = dt * cfg.alpha1 / margin_c;
        dT[t] = dt * cfg.alpha2 * (1.0 / margin_hi - 1.0 / margin_lo);
    }
    out.feasible = true;
    if (!want_grad) return out;

    out.gu1.assign(static_cast<size_t>(n), 0.0);
    out.gu2.assign(static_cast<size_t>(n), 0.0);
    double lt = 0.0, lc = 0.0; // cotangents of (T_t, C_t)
    for (int t = n - 1; t >= 0; --t) {
        lt += dT[t];
        lc += dC[t];
        const OdeState& prev = r.states[static_cast<size_t>(t)];
        out.gu1[t] = dt * cfg.w1 * sabs_d(u.u1[t], cfg.eps_l1) +
                     lt * dt / p.c * p.c_p * (u.u2[t] - prev.t_e) +
                     lc * dt / p.m * p.alpha * (sc.c_fresh - prev.c);
        out.gu2[t] = dt * cfg.w2 * sabs_d(u.u2[t] - cfg.u2_default, cfg.eps_l1) +
                     lt * dt / p.c * p.c_p * u.u1[t];
        // Pull the cotangents through the step to the previous state.
        lt = lt * (1.0 - dt / p.c * (1.0 / p.r + p.c_p * u.u1[t]));
        lc = lc * (1.0 - dt / p.m * p.alpha * u.u1[t]);
    }
    return out;
}

} // namespace

ControlSchedule ode_control(const Scenario& sc, const OdeParams& p, const ControlConfig& config) {
    p.validate();
    const int n = sc.horizon;
    ControlSchedule u = config.warm_start
                            ? *config.warm_start
                            : ControlSchedule::constant(n, sc.control_bounds.u1_max,
                                                        sc.constraints.t_min, sc.control_bounds);
    u.validate();

    OdeLoss cur = ode_loss(sc, p, u, config, true);
    if (!cur.feasible)
        throw ConfigError("ode_control: warm start infeasible for the reduced model");

    const double r1 = sc.control_bounds.u1_max - sc.control_bounds.u1_min;
    const double r2 = sc.control_bounds.u2_max - sc.control_bounds.u2_min;
    double lr = config.lr;
    ControlSchedule best = u;
    double best_loss = cur.value;

    for (int it = 0; it < config.iterations; ++it) {
        double gnorm = 0.0;
        for (int t = 0; t < n; ++t)
            gnorm = std::max({gnorm, std::abs(cur.gu1[t] * r1), std::abs(cur.gu2[t] * r2)});
        if (gnorm == 0.0) break;

        double step = lr;
        bool accepted = false;
        for (int h = 0; h <= config.max_halvings; ++h) {
            ControlSchedule cand = u;
            for (int t = 0; t < n; ++t) {
                cand.u1[t] = proj(u.u1[t] - step * r1 * (cur.gu1[t] * r1) / gnorm,
                                  sc.control_bounds.u1_min, sc.control_bounds.u1_max);
                cand.u2[t] = proj(u.u2[t] - step * r2 * (cur.gu2[t] * r2) / gnorm,
                                  sc.control_bounds.u2_min, sc.control_bounds.u2_max);
            }
            OdeLoss cl = ode_loss(sc, p, cand, config, true);
            if (!cl.feasible || cl.value >= cur.value) {
                step *= 0.5;
                continue;
            }
            u = std::move(cand);
            cur = std::move(cl);
            accepted = true;
            break;
        }
        if (!accepted) break;
        lr = std::min(step * config.growth, config.lr * 10.0);
        if (cur.value < best_loss) {
            best_loss = cur.value;
            best = u;
        }
    }
    return best;
}

ControlSchedule maxflow_policy(const Scenario& sc) {
    return ControlSchedule::constant(sc.horizon, sc.control_bounds.u1_max, sc.constraints.t_min,
                                     sc.control_bounds);
}

ControlSchedule minflow_policy(const Scenario& sc) {
    return ControlSchedule::constant(sc.horizon, sc.control_bounds.u1_min, sc.constraints.t_min,
                                     sc.control_bounds);
}

PolicyReport evaluate_policy(const std::string& name, const ControlSchedule& schedule,
                             const Scenario& sc, const ModelParams& params,
                             const ControlConfig& config) {
    PolicyReport rep;
    rep.name = name;
    if (schedule.size() == 0) return rep;
    schedule.validate();

    Trajectory traj = rollout(schedule, sc, params);
    rep.violations = compute_violations(traj, sc.constraints);

    const double dt = sc.dt_control;
    for (int t = 0; t < schedule.size(); ++t)
        rep.energy_proxy += dt * (config.w1 * std::abs(schedule.u1[t]) +
                                  config.w2 * std::abs(schedule.u2[t] - config.u2_default));

    ControlLossBreakdown bd = control_loss_breakdown(traj, schedule, config, sc);
    rep.loss_if_feasible =
        bd.barrier_feasible ? bd.total : std::numeric_limits<double>::quiet_NaN();
    return rep;
}

} // namespace ventsim
