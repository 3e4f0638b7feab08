#include <doctest.h>

#include "ventsim/adjoint.hpp"
#include "ventsim/adjoint_kernels.hpp"
#include "ventsim/interp.hpp"

#include "test_helpers.hpp"

#include <cmath>
#include <random>

using namespace ventsim;
using namespace ventsim::testutil;

namespace {

Grid small_grid() { return make_grid(4.2, 2.7, 12, 9); }

BoundaryMap small_bmap() {
    return classify_boundary(small_grid(), {
        {Side::Top, 2.7, 3.3, SegmentKind::SupplyVent},
        {Side::Top, 0.9, 1.5, SegmentKind::ReturnVent},
        {Side::Right, 0.0, 2.7, SegmentKind::OutsideWall},
    });
}

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-14});
}

} // namespace

// ---------------------------------------------------------------------------
// Transpose identities <A x, y> == <x, A^T y> for linear kernels.
// ---------------------------------------------------------------------------

TEST_CASE("transpose identity: scalar advection (frozen velocity)") {
    Grid g = small_grid();
    VectorField vel = random_vector(g, 1, 0.8);
    ScalarField x = random_scalar(g, 2);
    ScalarField y = random_scalar(g, 3);

    ScalarField ax = advect_scalar(x, vel, 0.3);
    double lhs = dot(ax.values, y.values);

    ScalarField aty = y;
    VectorField ignore(g);
    ScalarField zero_input(g, 0.0); // gradient terms vanish for the field-linear part
    reverse_advect_scalar(aty, zero_input, vel, 0.3, ignore);
    double rhs = dot(x.values, aty.values);

    CHECK(rel_err(lhs, rhs) < 1e-12);
}

TEST_CASE("transpose identity: scalar diffusion") {
    Grid g = small_grid();
    BoundaryMap bm = small_bmap();
    for (ScalarRole role : {ScalarRole::Temperature, ScalarRole::Co2}) {
        ScalarField x = random_scalar(g, 4);
        ScalarField y = random_scalar(g, 5);
        double k = 2e-3, dt = 0.5;

        double lhs = dot(diffuse_scalar(x, bm, role, k, dt).values, y.values);

        ScalarField aty = y;
        double gk = 0.0;
        ScalarField zero_input(g, 0.0);
        reverse_diffuse_scalar(aty, zero_input, bm, role, k, dt, gk);
        double rhs = dot(x.values, aty.values);

        CHECK(rel_err(lhs, rhs) < 1e-12);
    }
}

TEST_CASE("transpose identity: velocity diffusion") {
    Grid g = small_grid();
    BoundaryMap bm = small_bmap();
    VectorField x = random_vector(g, 6);
    VectorField y = random_vector(g, 7);
    double nu = 1.5e-3, dt = 0.5;

    double lhs = dot(diffuse_velocity(x, bm, nu, dt), y);

    VectorField aty = y;
    double gnu = 0.0;
    VectorField zero_input(g);
    reverse_diffuse_velocity(aty, zero_input, bm, nu, dt, gnu);
    double rhs = dot(x, aty);

    CHECK(rel_err(lhs, rhs) < 1e-12);
}

TEST_CASE("transpose identity: velocity advection (field-linear part)") {
    Grid g = small_grid();
    // Freeze the carrying velocity; probe the carried field around it. The
    // carried/carrier coupling is checked by finite differences below.
    VectorField carrier = random_vector(g, 8, 0.5);
    VectorField y = random_vector(g, 9);

    // Linear part extracted by differencing: A x = advect(carrier + x) -
    // advect(carrier) is not linear; instead check the full nonlinear kernel
    // by FD in its own test. Here verify the scatter transpose against a
    // directly assembled interpolation matrix on a tiny grid.
    Grid tiny = make_grid(1.0, 0.8, 5, 4);
    VectorField vel(tiny);
    vel.fill(0.21, -0.13);
    double dt = 0.3;

    // Forward matrix via unit probes of the carried field with the carrier
    // frozen: out = S(x; vel). S is linear in x when the backtrace velocity
    // is frozen, which holds for the u component only when the probe leaves
    // the carrier untouched, so probe through scalars on the same lattice.
    VectorField x = random_vector(tiny, 10);
    VectorField w = random_vector(tiny, 11);

    // Build S x by advecting (vel + epsilon*x) ... not linear. Use the
    // reverse kernel consistency check instead: FD on the full kernel.
    double eps = 1e-6;
    VectorField xp = vel, xm = vel;
    for (size_t k = 0; k < xp.u.size(); ++k) {
        xp.u[k] += eps * x.u[k];
        xm.u[k] -= eps * x.u[k];
    }
    for (size_t k = 0; k < xp.v.size(); ++k) {
        xp.v[k] += eps * x.v[k];
        xm.v[k] -= eps * x.v[k];
    }
    double fd = (dot(advect_velocity(xp, dt), w) - dot(advect_velocity(xm, dt), w)) / (2 * eps);

    VectorField cot = w;
    reverse_advect_velocity(cot, vel, dt);
    double adj = dot(cot, x);
    CHECK(rel_err(adj, fd) < 1e-7);
}

TEST_CASE("transpose identity: projection is self-adjoint on interior faces") {
    Grid g = small_grid();
    BoundaryMap bm = small_bmap();
    NsSettings settings;
    settings.poisson_tol = 1e-14;
    settings.poisson_max_iter = 50000;

    VectorField x = random_vector(g, 12);
    VectorField y = random_vector(g, 13);
    // Interior-only view: zero boundary faces on both probes.
    for (int j = 0; j < g.ny; ++j) {
        x.at_u(0, j) = x.at_u(g.nx, j) = 0.0;
        y.at_u(0, j) = y.at_u(g.nx, j) = 0.0;
    }
    for (int i = 0; i < g.nx; ++i) {
        x.at_v(i, 0) = x.at_v(i, g.ny) = 0.0;
        y.at_v(i, 0) = y.at_v(i, g.ny) = 0.0;
    }

    VectorField px = project(x, bm, settings).velocity;
    double lhs = dot(px, y);

    VectorField pty = y;
    reverse_project(pty, bm, settings);
    // Drop the boundary routing terms for the interior pairing.
    for (int j = 0; j < g.ny; ++j) pty.at_u(0, j) = pty.at_u(g.nx, j) = 0.0;
    for (int i = 0; i < g.nx; ++i) pty.at_v(i, 0) = pty.at_v(i, g.ny) = 0.0;
    double rhs = dot(x, pty);

    CHECK(rel_err(lhs, rhs) < 1e-11);
}

// ---------------------------------------------------------------------------
// Finite-difference checks for the nonlinear couplings kernel by kernel.
// ---------------------------------------------------------------------------

TEST_CASE("FD check: scalar advection velocity coupling") {
    Grid g = small_grid();
    VectorField vel = random_vector(g, 14, 0.6);
    ScalarField f = random_scalar(g, 15, 300.0, 900.0);
    ScalarField w = random_scalar(g, 16);
    VectorField dir = random_vector(g, 17);
    double dt = 0.3;

    ScalarField cot = w;
    VectorField cot_v(g);
    reverse_advect_scalar(cot, f, vel, dt, cot_v);
    double adj = dot(cot_v, dir);

    double eps = 1e-6;
    VectorField vp = vel, vm = vel;
    for (size_t k = 0; k < vel.u.size(); ++k) {
        vp.u[k] += eps * dir.u[k];
        vm.u[k] -= eps * dir.u[k];
    }
    for (size_t k = 0; k < vel.v.size(); ++k) {
        vp.v[k] += eps * dir.v[k];
        vm.v[k] -= eps * dir.v[k];
    }
    double fd =
        (dot(advect_scalar(f, vp, dt).values, w.values) -
         dot(advect_scalar(f, vm, dt).values, w.values)) /
        (2 * eps);

    CHECK(rel_err(adj, fd) < 1e-5);
}

TEST_CASE("FD check: diffusivity gradient") {
    Grid g = small_grid();
    BoundaryMap bm = small_bmap();
    ScalarField f = random_scalar(g, 18, 300.0, 900.0);
    ScalarField w = random_scalar(g, 19);
    double k = 2e-3, dt = 0.5;

    ScalarField cot = w;
    double gk = 0.0;
    reverse_diffuse_scalar(cot, f, bm, ScalarRole::Temperature, k, dt, gk);

    double eps = 1e-8;
    double fd = (dot(diffuse_scalar(f, bm, ScalarRole::Temperature, k + eps, dt).values, w.values) -
                 dot(diffuse_scalar(f, bm, ScalarRole::Temperature, k - eps, dt).values, w.values)) /
                (2 * eps);
    CHECK(rel_err(gk, fd) < 1e-6);
}

TEST_CASE("FD check: velocity BC routes gradients to u1") {
    Grid g = small_grid();
    BoundaryMap bm = small_bmap();
    VectorField w = random_vector(g, 20);
    VectorField base = random_vector(g, 21, 0.4);
    double u1 = 0.8;

    VectorField cot = w;
    double gu1 = 0.0;
    reverse_velocity_bc(cot, bm, VelocityBcMode::Full, gu1);

    double eps = 1e-7;
    auto value = [&](double u) {
        VectorField v = base;
        apply_velocity_bc(v, bm, u, VelocityBcMode::Full);
        return dot(v, w);
    };
    double fd = (value(u1 + eps) - value(u1 - eps)) / (2 * eps);
    CHECK(rel_err(gu1, fd) < 1e-8);

    // Interior-donor coupling through the zero-gradient copy and mass
    // balance.
    VectorField dir = random_vector(g, 22);
    double adj_dir = dot(cot, dir);
    auto value_v = [&](double sgn) {
        VectorField v = base;
        for (size_t k = 0; k < v.u.size(); ++k) v.u[k] += sgn * eps * dir.u[k];
        for (size_t k = 0; k < v.v.size(); ++k) v.v[k] += sgn * eps * dir.v[k];
        apply_velocity_bc(v, bm, u1, VelocityBcMode::Full);
        return dot(v, w);
    };
    double fd_dir = (value_v(1.0) - value_v(-1.0)) / (2 * eps);
    CHECK(rel_err(adj_dir, fd_dir) < 1e-7);
}

TEST_CASE("FD check: CO2 BC routes gradients to alpha and the room mean") {
    Grid g = small_grid();
    BoundaryMap bm = small_bmap();
    ScalarField base = random_scalar(g, 23, 400.0, 1200.0);
    ScalarField w = random_scalar(g, 24);
    double alpha = 0.65, cf = 400.0;

    ScalarField probe = base;
    double mean_used = apply_co2_bc(probe, bm, alpha, cf);

    ScalarField cot = w;
    double galpha = 0.0;
    reverse_co2_bc(cot, bm, alpha, cf, mean_used, galpha);

    double eps = 1e-6;
    auto value_alpha = [&](double a) {
        ScalarField c = base;
        apply_co2_bc(c, bm, a, cf);
        return dot(c.values, w.values);
    };
    double fd_alpha = (value_alpha(alpha + eps) - value_alpha(alpha - eps)) / (2 * eps);
    CHECK(rel_err(galpha, fd_alpha) < 1e-7);

    ScalarField dir = random_scalar(g, 25);
    double adj_dir = dot(cot.values, dir.values);
    auto value_field = [&](double sgn) {
        ScalarField c = base;
        for (size_t k = 0; k < c.values.size(); ++k) c.values[k] += sgn * eps * dir.values[k];
        apply_co2_bc(c, bm, alpha, cf);
        return dot(c.values, w.values);
    };
    double fd_dir = (value_field(1.0) - value_field(-1.0)) / (2 * eps);
    CHECK(rel_err(adj_dir, fd_dir) < 1e-7);
}

// ---------------------------------------------------------------------------
// Composed step and full-rollout checks.
// ---------------------------------------------------------------------------

TEST_CASE("backward: zero cotangent and linearity") {
    Scenario sc = small_scenario(8, 6, 3);
    ModelParams params;
    ControlSchedule sched = ControlSchedule::constant(3, 1.0, 16.0, sc.control_bounds);
    Trajectory traj = rollout(sched, sc, params);

    // Zero loss partials give zero gradients.
    LossPartials zero;
    zero.dl_dq.assign(3, StateCotangent(sc.grid));
    zero.dl_du.assign(3, ControlCotangent{});
    Gradients gz = backward(traj, sc, params, zero);
    for (auto& c : gz.controls) {
        CHECK(c.u1 == 0.0);
        CHECK(c.u2 == 0.0);
    }
    for (int k = 0; k < ModelParams::kCount; ++k) CHECK(gz.params[k] == 0.0);

    // Doubling the seed cotangent doubles every gradient.
    LossFn probe = make_probe_loss(sc, 99);
    LossEvaluation ev = probe(traj);
    Gradients g1 = backward(traj, sc, params, ev.partials);

    LossPartials doubled = ev.partials;
    for (auto& dq : doubled.dl_dq) {
        for (double& x : dq.velocity.u) x *= 2;
        for (double& x : dq.velocity.v) x *= 2;
        for (double& x : dq.temperature.values) x *= 2;
        for (double& x : dq.co2.values) x *= 2;
    }
    for (auto& du : doubled.dl_du) {
        du.u1 *= 2;
        du.u2 *= 2;
    }
    Gradients g2 = backward(traj, sc, params, doubled);
    for (int t = 0; t < 3; ++t) {
        CHECK(g2.controls[t].u1 == doctest::Approx(2 * g1.controls[t].u1).epsilon(1e-12));
        CHECK(g2.controls[t].u2 == doctest::Approx(2 * g1.controls[t].u2).epsilon(1e-12));
    }
    for (int k = 0; k < ModelParams::kCount; ++k)
        CHECK(g2.params[k] == doctest::Approx(2 * g1.params[k]).epsilon(1e-12));
}

TEST_CASE("backward: state-independent loss leaves only control partials") {
    Scenario sc = small_scenario(8, 6, 2);
    ModelParams params;
    ControlSchedule sched = ControlSchedule::constant(2, 0.9, 15.0, sc.control_bounds);
    Trajectory traj = rollout(sched, sc, params);

    LossPartials lp;
    lp.dl_dq.assign(2, StateCotangent(sc.grid));
    lp.dl_du.assign(2, ControlCotangent{3.0, -1.5});
    Gradients g = backward(traj, sc, params, lp);
    for (int t = 0; t < 2; ++t) {
        CHECK(g.controls[t].u1 == 3.0);
        CHECK(g.controls[t].u2 == -1.5);
    }
    for (int k = 0; k < ModelParams::kCount; ++k) CHECK(g.params[k] == 0.0);
}

TEST_CASE("tape enforces reverse order and repeated sweeps agree") {
    Scenario sc = small_scenario(8, 6, 2);
    ModelParams params;
    ControlSchedule sched = ControlSchedule::constant(2, 1.0, 16.0, sc.control_bounds);
    Trajectory traj = rollout(sched, sc, params);
    LossFn probe = make_probe_loss(sc, 5);
    LossEvaluation ev = probe(traj);

    AdjointTape tape(traj, sc, params);
    CHECK(tape.next() == 1);
    (void)tape.reverse_step(ev.partials.dl_dq[1]);
    CHECK(tape.next() == 0);
    (void)tape.reverse_step(ev.partials.dl_dq[0]);
    CHECK(tape.done());
    CHECK_THROWS_AS(tape.reverse_step(ev.partials.dl_dq[0]), std::logic_error);

    Gradients a = backward(traj, sc, params, ev.partials);
    Gradients b = backward(traj, sc, params, ev.partials);
    for (int t = 0; t < 2; ++t) {
        CHECK(a.controls[t].u1 == b.controls[t].u1);
        CHECK(a.controls[t].u2 == b.controls[t].u2);
    }
    for (int k = 0; k < ModelParams::kCount; ++k) CHECK(a.params[k] == b.params[k]);
}

TEST_CASE("gradcheck: adjoint matches finite differences on a 12x9 rollout" *
          doctest::timeout(300)) {
    Scenario sc = small_scenario(12, 9, 5);
    ModelParams params;
    ControlSchedule sched = ControlSchedule::constant(5, 1.0, 16.0, sc.control_bounds);
    // Vary the schedule so control gradients are probed away from symmetry.
    for (int t = 0; t < 5; ++t) {
        sched.u1[t] = 0.6 + 0.1 * t;
        sched.u2[t] = 14.0 + 0.5 * t;
    }

    GradCheckReport report = gradcheck(sc, params, sched, make_probe_loss(sc, 7), 10, 1234);
    REQUIRE(report.directions.size() == 10);
    CHECK(report.max_rel_error <= 1e-3);
    CHECK(report.median_rel_error <= 1e-4);
}

TEST_CASE("gradcheck: empty horizon yields an empty report") {
    Scenario sc = small_scenario(8, 6, 2);
    ModelParams params;
    ControlSchedule empty;
    empty.bounds = sc.control_bounds;
    GradCheckReport report = gradcheck(sc, params, empty, make_probe_loss(sc, 3), 5, 9);
    CHECK(report.directions.empty());
}

TEST_CASE("gradcheck: corrupted gradients are caught") {
    Scenario sc = small_scenario(8, 6, 3);
    ModelParams params;
    ControlSchedule sched = ControlSchedule::constant(3, 1.0, 16.0, sc.control_bounds);

    LossFn honest = make_probe_loss(sc, 11);
    // Same loss values, corrupted partials: the comparison must fail.
    LossFn corrupted = [honest](const Trajectory& traj) {
        LossEvaluation ev = honest(traj);
        for (auto& dq : ev.partials.dl_dq)
            for (double& x : dq.co2.values) x *= 1.10;
        return ev;
    };
    GradCheckReport bad = gradcheck(sc, params, sched, corrupted, 6, 77);
    CHECK(bad.max_rel_error > 1e-3);
}
