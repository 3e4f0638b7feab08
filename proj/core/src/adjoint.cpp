#include "ventsim/adjoint.hpp"

#include "ventsim/adjoint_kernels.hpp"
#include "ventsim/errors.hpp"
#include "ventsim/interp.hpp"
#include "ventsim/ns_solver.hpp"
#include "ventsim/transport.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ventsim {

void StateCotangent::accumulate(const StateCotangent& o) {
    for (size_t k = 0; k < velocity.u.size(); ++k) velocity.u[k] += o.velocity.u[k];
    for (size_t k = 0; k < velocity.v.size(); ++k) velocity.v[k] += o.velocity.v[k];
    for (size_t k = 0; k < temperature.values.size(); ++k)
        temperature.values[k] += o.temperature.values[k];
    for (size_t k = 0; k < co2.values.size(); ++k) co2.values[k] += o.co2.values[k];
}

namespace {

// ---------------------------------------------------------------------------
// Boundary face enumeration shared by the velocity BC reversal and the
// projection reversal. `out_sign` converts the raw component into the
// outward one; `h` is the divergence denominator of that face.
// ---------------------------------------------------------------------------
struct BFace {
    bool is_u = false;
    int i = 0, j = 0;           // face index on its lattice
    double out_sign = 1.0;
    double len = 0.0;
    double h = 0.0;
    int donor_i = 0, donor_j = 0; // adjacent interior face, same lattice
    int cell_i = 0, cell_j = 0;   // adjacent cell
    SegmentKind kind = SegmentKind::SolidWall;
};

std::vector<BFace> boundary_faces(const BoundaryMap& bmap) {
    const Grid& g = bmap.grid;
    std::vector<BFace> out;
    out.reserve(2 * g.nx + 2 * g.ny);
    for (int i = 0; i < g.nx; ++i) {
        out.push_back({false, i, g.ny, +1.0, g.dx, g.dy, i, g.ny - 1, i, g.ny - 1,
                       bmap.top_face[i]});
        out.push_back({false, i, 0, -1.0, g.dx, g.dy, i, 1, i, 0, bmap.bottom_face[i]});
    }
    for (int j = 0; j < g.ny; ++j) {
        out.push_back({true, 0, j, -1.0, g.dy, g.dx, 1, j, 0, j, bmap.left_face[j]});
        out.push_back({true, g.nx, j, +1.0, g.dy, g.dx, g.nx - 1, j, g.nx - 1, j,
                       bmap.right_face[j]});
    }
    return out;
}

double& face_ref(VectorField& v, const BFace& b) {
    return b.is_u ? v.at_u(b.i, b.j) : v.at_v(b.i, b.j);
}

double& donor_ref(VectorField& v, const BFace& b) {
    return b.is_u ? v.at_u(b.donor_i, b.donor_j) : v.at_v(b.donor_i, b.donor_j);
}

// ---------------------------------------------------------------------------
// Substep tape: everything the reverse kernels need, recomputed per control
// step from the stored checkpoint.
// ---------------------------------------------------------------------------
struct SubstepRecord {
    VectorField v_bc;    // after the full velocity BC (advection input)
    VectorField v_adv;   // after advection (diffusion input)
    VectorField v_final; // after projection + Dirichlet BC (transports scalars)
    ScalarField t_bc, c_bc;   // after the first scalar BCs (advection inputs)
    ScalarField t_adv, c_adv; // after advection (diffusion inputs)
    double meanc_pre = 0.0;   // room mean used by the first CO2 BC
    double meanc_post = 0.0;  // room mean used by the final CO2 BC
};

// Mirrors step(): one flow substep followed by one transport substep,
// recording kernel inputs. Must stay in lockstep with ns_step() and
// transport_step().
State run_substeps(const State& q_prev, double u1, double u2, double headcount, double t_ambient,
                   const ModelParams& params, const Scenario& sc,
                   std::vector<SubstepRecord>* tape) {
    NsSettings settings = sc.solver;
    settings.nu = params.nu;
    const double dt = settings.dt_solver;
    const int n = sc.substeps();
    const BoundaryMap& bmap = sc.bmap;

    State q = q_prev;
    if (tape) tape->resize(static_cast<size_t>(n), SubstepRecord{});
    for (int s = 0; s < n; ++s) {
        SubstepRecord* rec = tape ? &(*tape)[s] : nullptr;

        VectorField w = q.velocity;
        apply_velocity_bc(w, bmap, u1, VelocityBcMode::Full);
        if (rec) rec->v_bc = w;
        w = advect_velocity(w, dt);
        if (rec) rec->v_adv = w;
        w = diffuse_velocity(w, bmap, settings.nu, dt);
        add_gravity(w, dt);
        ProjectionResult pr = project(w, bmap, settings);
        w = std::move(pr.velocity);
        apply_velocity_bc(w, bmap, u1, VelocityBcMode::DirichletOnly);
        q.velocity = w;
        q.pressure = std::move(pr.pressure);
        if (rec) rec->v_final = q.velocity;

        apply_temperature_bc(q.temperature, bmap, u2, t_ambient);
        double mpre = apply_co2_bc(q.co2, bmap, params.alpha, sc.c_fresh);
        if (rec) {
            rec->t_bc = q.temperature;
            rec->c_bc = q.co2;
            rec->meanc_pre = mpre;
        }
        q.temperature = advect_scalar(q.temperature, q.velocity, dt);
        q.co2 = advect_scalar(q.co2, q.velocity, dt);
        if (rec) {
            rec->t_adv = q.temperature;
            rec->c_adv = q.co2;
        }
        q.temperature = diffuse_scalar(q.temperature, bmap, ScalarRole::Temperature, params.k_te, dt);
        q.co2 = diffuse_scalar(q.co2, bmap, ScalarRole::Co2, params.k_c, dt);
        add_sources(q.temperature, sc.occupancy, params.alpha_te, headcount, dt);
        add_sources(q.co2, sc.occupancy, params.alpha_c, headcount, dt);
        apply_temperature_bc(q.temperature, bmap, u2, t_ambient);
        double mpost = apply_co2_bc(q.co2, bmap, params.alpha, sc.c_fresh);
        if (rec) rec->meanc_post = mpost;
    }
    return q;
}

} // namespace

// ---------------------------------------------------------------------------
// Scalar boundary-condition reversals.
// ---------------------------------------------------------------------------
void reverse_temperature_bc(ScalarField& cot, const BoundaryMap& bmap, double& grad_u2) {
    const Grid& g = cot.grid;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (!g.is_perimeter(i, j)) continue;
            double w = cot(i, j);
            cot(i, j) = 0.0;
            switch (bmap.cell(i, j)) {
                case SegmentKind::SupplyVent: grad_u2 += w; break;
                case SegmentKind::OutsideWall: break; // ambient is a disturbance
                default: {
                    auto [ni, nj] = interior_neighbor(g, i, j);
                    cot(ni, nj) += w;
                }
            }
        }
}

void reverse_co2_bc(ScalarField& cot, const BoundaryMap& bmap, double alpha, double c_fresh,
                    double mean_used, double& grad_alpha) {
    const Grid& g = cot.grid;
    double acc = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (!g.is_perimeter(i, j)) continue;
            double w = cot(i, j);
            cot(i, j) = 0.0;
            if (bmap.cell(i, j) == SegmentKind::SupplyVent) {
                acc += w;
            } else {
                auto [ni, nj] = interior_neighbor(g, i, j);
                cot(ni, nj) += w;
            }
        }
    grad_alpha += acc * (c_fresh - mean_used);
    double spread = acc * (1.0 - alpha) / static_cast<double>(g.cell_count());
    for (double& x : cot.values) x += spread;
}

// Transpose of the flux-form diffusion update; also accumulates the
// diffusivity gradient against the recorded input field.
void reverse_diffuse_scalar(ScalarField& cot, const ScalarField& input, const BoundaryMap& bmap,
                            ScalarRole role, double k, double dt, double& grad_k) {
    if (k == 0.0) return;
    const Grid& g = cot.grid;
    const double ax = k * dt / (g.dx * g.dx), ay = k * dt / (g.dy * g.dy);
    auto flux_on = [&](int ni, int nj) {
        return !g.is_perimeter(ni, nj) || is_dirichlet_boundary(role, bmap.cell(ni, nj));
    };
    ScalarField out = cot;
    for (int j = 1; j < g.ny - 1; ++j)
        for (int i = 1; i < g.nx - 1; ++i) {
            double m = cot(i, j);
            if (m != 0.0) {
                auto push = [&](int ni, int nj, double a) {
                    if (flux_on(ni, nj)) {
                        out(ni, nj) += a * m;
                        out(i, j) -= a * m;
                    }
                };
                push(i - 1, j, ax);
                push(i + 1, j, ax);
                push(i, j - 1, ay);
                push(i, j + 1, ay);
            }
            grad_k += cot(i, j) * dt * scalar_flux_sum(input, bmap, role, i, j);
        }
    cot = std::move(out);
}

// Transpose of semi-Lagrangian scalar transport. Consumes the cotangent of
// the advected field; produces the cotangent of the input field and adds
// the backtrace coupling into the velocity cotangent.
void reverse_advect_scalar(ScalarField& cot, const ScalarField& input, const VectorField& vel,
                           double dt, VectorField& cot_v) {
    const Grid& g = cot.grid;
    ScalarField out(g, 0.0);
    // Perimeter cells pass through.
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (g.is_perimeter(i, j)) out(i, j) = cot(i, j);

    for (int j = 1; j < g.ny - 1; ++j)
        for (int i = 1; i < g.nx - 1; ++i) {
            double m = cot(i, j);
            LinStencil su = u_stencil(g, i + 0.5, j);
            LinStencil sv = v_stencil(g, i, j + 0.5);
            double vel_x = su.value(vel.u);
            double vel_y = sv.value(vel.v);
            LinStencil sb = cell_stencil(g, i - dt * vel_x / g.dx, j - dt * vel_y / g.dy);
            if (m == 0.0) continue;
            sb.scatter(out.values, m);
            double gx = sb.ddx(input.values, g.dx);
            double gy = sb.ddy(input.values, g.dy);
            su.scatter(cot_v.u, -dt * m * gx);
            sv.scatter(cot_v.v, -dt * m * gy);
        }
    cot = std::move(out);
}

// ---------------------------------------------------------------------------
// Velocity kernel reversals.
// ---------------------------------------------------------------------------
void reverse_advect_velocity(VectorField& cot, const VectorField& input, double dt) {
    const Grid& g = cot.grid;
    VectorField out(g);
    // Boundary faces pass through.
    for (int j = 0; j < g.ny; ++j) {
        out.at_u(0, j) = cot.at_u(0, j);
        out.at_u(g.nx, j) = cot.at_u(g.nx, j);
    }
    for (int i = 0; i < g.nx; ++i) {
        out.at_v(i, 0) = cot.at_v(i, 0);
        out.at_v(i, g.ny) = cot.at_v(i, g.ny);
    }

    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) {
            double m = cot.at_u(i, j);
            if (m == 0.0) continue;
            LinStencil sv = v_stencil(g, i - 0.5, j + 0.5);
            double vel_x = input.at_u(i, j);
            double vel_y = sv.value(input.v);
            LinStencil sb = u_stencil(g, i - dt * vel_x / g.dx, j - dt * vel_y / g.dy);
            sb.scatter(out.u, m);
            double gx = sb.ddx(input.u, g.dx);
            double gy = sb.ddy(input.u, g.dy);
            out.at_u(i, j) += -dt * m * gx;
            sv.scatter(out.v, -dt * m * gy);
        }
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double m = cot.at_v(i, j);
            if (m == 0.0) continue;
            LinStencil su = u_stencil(g, i + 0.5, j - 0.5);
            double vel_x = su.value(input.u);
            double vel_y = input.at_v(i, j);
            LinStencil sb = v_stencil(g, i - dt * vel_x / g.dx, j - dt * vel_y / g.dy);
            sb.scatter(out.v, m);
            double gx = sb.ddx(input.v, g.dx);
            double gy = sb.ddy(input.v, g.dy);
            su.scatter(out.u, -dt * m * gx);
            out.at_v(i, j) += -dt * m * gy;
        }
    cot = std::move(out);
}

void reverse_diffuse_velocity(VectorField& cot, const VectorField& input, const BoundaryMap& bmap,
                              double nu, double dt, double& grad_nu) {
    if (nu == 0.0) return;
    const Grid& g = cot.grid;
    const double ax = nu * dt / (g.dx * g.dx), ay = nu * dt / (g.dy * g.dy);
    VectorField out = cot;

    auto gsign = [&](Side s, double coord) {
        return bmap.side_kind_at(s, coord) == SegmentKind::ReturnVent ? 1.0 : -1.0;
    };

    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) {
            double m = cot.at_u(i, j);
            grad_nu += m * dt * u_laplacian(input, bmap, i, j);
            if (m == 0.0) continue;
            out.at_u(i - 1, j) += ax * m;
            out.at_u(i + 1, j) += ax * m;
            out.at_u(i, j) -= 2 * (ax + ay) * m;
            if (j > 0) out.at_u(i, j - 1) += ay * m;
            else out.at_u(i, j) += gsign(Side::Bottom, g.u_x(i)) * ay * m;
            if (j < g.ny - 1) out.at_u(i, j + 1) += ay * m;
            else out.at_u(i, j) += gsign(Side::Top, g.u_x(i)) * ay * m;
        }
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double m = cot.at_v(i, j);
            grad_nu += m * dt * v_laplacian(input, bmap, i, j);
            if (m == 0.0) continue;
            out.at_v(i, j - 1) += ay * m;
            out.at_v(i, j + 1) += ay * m;
            out.at_v(i, j) -= 2 * (ax + ay) * m;
            if (i > 0) out.at_v(i - 1, j) += ax * m;
            else out.at_v(i, j) += gsign(Side::Left, g.v_y(j)) * ax * m;
            if (i < g.nx - 1) out.at_v(i + 1, j) += ax * m;
            else out.at_v(i, j) += gsign(Side::Right, g.v_y(j)) * ax * m;
        }
    cot = std::move(out);
}

// The projection is an orthogonal projector, hence self-adjoint on the
// interior faces; boundary faces pick up the adjoint pressure through the
// divergence stencil.
void reverse_project(VectorField& cot, const BoundaryMap& bmap, const NsSettings& settings) {
    const Grid& g = cot.grid;
    VectorField interior = cot;
    for (const BFace& b : boundary_faces(bmap)) face_ref(interior, b) = 0.0;

    ScalarField rhs = divergence(interior);
    ScalarField psi = solve_poisson_neumann(rhs, settings);

    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) cot.at_u(i, j) -= (psi(i, j) - psi(i - 1, j)) / g.dx;
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) cot.at_v(i, j) -= (psi(i, j) - psi(i, j - 1)) / g.dy;

    for (const BFace& b : boundary_faces(bmap))
        face_ref(cot, b) += b.out_sign / b.h * psi(b.cell_i, b.cell_j);
}

void reverse_velocity_bc(VectorField& cot, const BoundaryMap& bmap, VelocityBcMode mode,
                         double& grad_u1) {
    std::vector<BFace> faces = boundary_faces(bmap);
    const bool full = (mode == VelocityBcMode::Full);

    if (full) {
        double supply_len = 0.0, return_len = 0.0;
        for (const BFace& b : faces) {
            if (b.kind == SegmentKind::SupplyVent) supply_len += b.len;
            if (b.kind == SegmentKind::ReturnVent) return_len += b.len;
        }
        if (return_len > 0.0) {
            // Return face r: raw_r = donor_r + out_sign_r * (u1*L_sup - sum_r'
            // out_sign_r' * donor_r' * len_r') / L_ret.
            double s1 = 0.0;
            for (const BFace& b : faces)
                if (b.kind == SegmentKind::ReturnVent) s1 += face_ref(cot, b) * b.out_sign;
            for (const BFace& b : faces) {
                if (b.kind != SegmentKind::ReturnVent) continue;
                donor_ref(cot, b) += face_ref(cot, b);
                face_ref(cot, b) = 0.0;
            }
            for (const BFace& b : faces)
                if (b.kind == SegmentKind::ReturnVent)
                    donor_ref(cot, b) -= s1 * b.out_sign * b.len / return_len;
            grad_u1 += s1 * supply_len / return_len;
        }
    }

    for (const BFace& b : faces) {
        switch (b.kind) {
            case SegmentKind::SupplyVent:
                grad_u1 -= face_ref(cot, b) * b.out_sign; // raw = -out_sign*u1
                face_ref(cot, b) = 0.0;
                break;
            case SegmentKind::ReturnVent:
                break; // handled above in full mode, untouched otherwise
            default:
                face_ref(cot, b) = 0.0;
                break;
        }
    }
}

StepVjpResult step_vjp(const State& q_prev, double u1, double u2, double headcount,
                       double t_ambient, const ModelParams& params, const Scenario& sc,
                       const StateCotangent& cot_next) {
    const Grid& g = sc.grid;
    if (cot_next.velocity.grid != g || cot_next.temperature.grid != g)
        throw std::invalid_argument("step_vjp: cotangent shape does not match the scenario grid");

    NsSettings settings = sc.solver;
    settings.nu = params.nu;
    const double dt = settings.dt_solver;
    const BoundaryMap& bmap = sc.bmap;

    std::vector<SubstepRecord> tape;
    run_substeps(q_prev, u1, u2, headcount, t_ambient, params, sc, &tape);

    StepVjpResult res;
    res.prev = StateCotangent(g);
    VectorField cv = cot_next.velocity;
    ScalarField ct = cot_next.temperature;
    ScalarField cc = cot_next.co2;

    double grad_u1 = 0.0, grad_u2 = 0.0;
    ParamVector gp;

    for (int s = static_cast<int>(tape.size()) - 1; s >= 0; --s) {
        const SubstepRecord& rec = tape[s];

        // Transport reversal (mirror of the forward order, reversed).
        reverse_co2_bc(cc, bmap, params.alpha, sc.c_fresh, rec.meanc_post, gp.alpha());
        reverse_temperature_bc(ct, bmap, grad_u2);

        double density = sc.occupancy.density(headcount);
        if (density != 0.0) {
            for (int c : sc.occupancy.cells) {
                gp.alpha_te() += ct.values[c] * density * dt;
                gp.alpha_c() += cc.values[c] * density * dt;
            }
        }

        reverse_diffuse_scalar(ct, rec.t_adv, bmap, ScalarRole::Temperature, params.k_te, dt,
                               gp.k_te());
        reverse_diffuse_scalar(cc, rec.c_adv, bmap, ScalarRole::Co2, params.k_c, dt, gp.k_c());

        reverse_advect_scalar(cc, rec.c_bc, rec.v_final, dt, cv);
        reverse_advect_scalar(ct, rec.t_bc, rec.v_final, dt, cv);

        reverse_co2_bc(cc, bmap, params.alpha, sc.c_fresh, rec.meanc_pre, gp.alpha());
        reverse_temperature_bc(ct, bmap, grad_u2);

        // Flow reversal.
        reverse_velocity_bc(cv, bmap, VelocityBcMode::DirichletOnly, grad_u1);
        reverse_project(cv, bmap, settings);
        reverse_diffuse_velocity(cv, rec.v_adv, bmap, settings.nu, dt, gp.nu());
        reverse_advect_velocity(cv, rec.v_bc, dt);
        reverse_velocity_bc(cv, bmap, VelocityBcMode::Full, grad_u1);
    }

    res.prev.velocity = std::move(cv);
    res.prev.temperature = std::move(ct);
    res.prev.co2 = std::move(cc);
    res.control.u1 = grad_u1;
    res.control.u2 = grad_u2;
    res.params = gp;
    if (!res.prev.all_finite()) throw NumericalError("step_vjp produced non-finite cotangents");
    return res;
}

AdjointTape::AdjointTape(const Trajectory& traj, const Scenario& sc, const ModelParams& params)
    : traj_(traj), sc_(sc), params_(params), cursor_(traj.steps() - 1) {}

StepVjpResult AdjointTape::reverse_step(const StateCotangent& cot_next) {
    if (cursor_ < 0)
        throw std::logic_error("AdjointTape: backward sweep already consumed every step");
    int t = cursor_--;
    return step_vjp(traj_.states[static_cast<size_t>(t)], traj_.schedule.u1[t],
                    traj_.schedule.u2[t], traj_.headcount[t], traj_.ambient[t], params_, sc_,
                    cot_next);
}

Gradients backward(const Trajectory& traj, const Scenario& sc, const ModelParams& params,
                   const LossPartials& partials) {
    const int n = traj.steps();
    if (static_cast<int>(partials.dl_dq.size()) != n ||
        static_cast<int>(partials.dl_du.size()) != n)
        throw std::invalid_argument("backward: loss partials do not match the trajectory length");

    Gradients grads;
    grads.controls.resize(static_cast<size_t>(n));
    if (n == 0) return grads;

    AdjointTape tape(traj, sc, params);
    StateCotangent cot = partials.dl_dq[static_cast<size_t>(n - 1)];
    for (int t = n - 1; t >= 0; --t) {
        StepVjpResult res = tape.reverse_step(cot);
        grads.controls[t].u1 = partials.dl_du[t].u1 + res.control.u1;
        grads.controls[t].u2 = partials.dl_du[t].u2 + res.control.u2;
        grads.params += res.params;
        if (t > 0) {
            cot = partials.dl_dq[static_cast<size_t>(t - 1)];
            cot.accumulate(res.prev);
        }
    }
    return grads;
}

LossFn make_probe_loss(const Scenario& sc, uint64_t seed) {
    struct Probe {
        double x, y, wt, wc;
    };
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> frac(0.15, 0.85);
    std::uniform_real_distribution<double> weight(0.5, 1.5);
    std::vector<Probe> probes;
    for (int k = 0; k < 4; ++k)
        probes.push_back({frac(rng) * sc.grid.lx, frac(rng) * sc.grid.ly, weight(rng), weight(rng)});
    const double wq = 1e-3;
    const double cf = sc.c_fresh;
    const Grid grid = sc.grid;

    return [probes, wq, cf, grid](const Trajectory& traj) {
        LossEvaluation ev;
        const int n = traj.steps();
        ev.partials.dl_dq.assign(static_cast<size_t>(n), StateCotangent(grid));
        ev.partials.dl_du.assign(static_cast<size_t>(n), ControlCotangent{});
        for (int t = 0; t < n; ++t) {
            const State& q = traj.state_after(t);
            StateCotangent& dq = ev.partials.dl_dq[static_cast<size_t>(t)];
            for (const Probe& p : probes) {
                LinStencil s = cell_stencil(grid, p.x / grid.dx - 0.5, p.y / grid.dy - 0.5);
                ev.value += p.wt * s.value(q.temperature.values) + p.wc * s.value(q.co2.values);
                s.scatter(dq.temperature.values, p.wt);
                s.scatter(dq.co2.values, p.wc);
            }
        }
        if (n > 0) {
            const State& last = traj.state_after(n - 1);
            double m = mean(last.co2);
            ev.value += wq * (m - cf) * (m - cf);
            double d = wq * 2.0 * (m - cf) / static_cast<double>(grid.cell_count());
            for (double& x : ev.partials.dl_dq.back().co2.values) x += d;
        }
        return ev;
    };
}

GradCheckReport gradcheck(const Scenario& sc, const ModelParams& params,
                          const ControlSchedule& schedule, const LossFn& loss, int probes,
                          uint64_t seed, double fd_step) {
    GradCheckReport report;
    const int n = schedule.size();
    if (n == 0 || probes <= 0) return report;

    Trajectory base = rollout(schedule, sc, params);
    LossEvaluation ev = loss(base);
    Gradients grads = backward(base, sc, params, ev.partials);

    // Per-coordinate scales keep the joint direction meaningful across
    // controls (order 1) and parameters (order 1e-3 .. 1).
    const double su1 = 0.05, su2 = 0.25;
    std::array<double, ModelParams::kCount> sp;
    for (int k = 0; k < ModelParams::kCount; ++k) sp[k] = 0.25 * std::max(std::abs(params[k]), 1e-4);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    for (int probe = 0; probe < probes; ++probe) {
        std::vector<double> du1(n), du2(n);
        std::array<double, ModelParams::kCount> dp{};
        for (int t = 0; t < n; ++t) {
            du1[t] = gauss(rng);
            du2[t] = gauss(rng);
        }
        for (int k = 0; k < ModelParams::kCount; ++k) dp[k] = gauss(rng);

        double adj = 0.0;
        for (int t = 0; t < n; ++t)
            adj += grads.controls[t].u1 * su1 * du1[t] + grads.controls[t].u2 * su2 * du2[t];
        for (int k = 0; k < ModelParams::kCount; ++k) adj += grads.params[k] * sp[k] * dp[k];

        auto shifted_value = [&](double sign) {
            ControlSchedule s = schedule;
            ModelParams p = params;
            for (int t = 0; t < n; ++t) {
                s.u1[t] += sign * fd_step * su1 * du1[t];
                s.u2[t] += sign * fd_step * su2 * du2[t];
            }
            for (int k = 0; k < ModelParams::kCount; ++k) p[k] += sign * fd_step * sp[k] * dp[k];
            return loss(rollout(s, sc, p)).value;
        };
        double fd = (shifted_value(+1.0) - shifted_value(-1.0)) / (2.0 * fd_step);

        GradCheckDirection d;
        d.adjoint = adj;
        d.fd = fd;
        d.rel_error = std::abs(adj - fd) / std::max({std::abs(adj), std::abs(fd), 1e-12});
        report.directions.push_back(d);
    }

    std::vector<double> errs;
    for (const auto& d : report.directions) errs.push_back(d.rel_error);
    std::sort(errs.begin(), errs.end());
    report.max_rel_error = errs.back();
    report.median_rel_error = errs[errs.size() / 2];
    return report;
}

} // namespace ventsim
