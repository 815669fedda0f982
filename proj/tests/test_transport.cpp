#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "wassflow/flows.hpp"
#include "wassflow/presets.hpp"
#include "wassflow/transport.hpp"

using namespace wassflow;

namespace {

AnalyticDensity blob(Vec2 c = {0.35, 0.4}, double sigma = 0.08) {
    return gaussian_mixture({{c, sigma, 1.0}});
}

double l1_distance(const GridDensity& a, const GridDensity& b) {
    double err = 0.0;
    for (std::size_t k = 0; k < a.values.size(); ++k)
        err += std::abs(a.values[k] - b.values[k]);
    return err * a.grid.cell_area();
}

} // namespace

TEST_CASE("cfl_dt: formula, stationary cap, safety scaling") {
    const GridSpec g(100, 100, 0, 0, 1, 1); // h = 0.01
    GridVectorField v(g);
    v.u(3, 7) = 2.0;
    CHECK(cfl_dt(v, 0.5) == doctest::Approx(0.0025).epsilon(1e-14));

    GridVectorField zero(g);
    CHECK(cfl_dt(zero, 0.5, 0.125) == 0.125);
    CHECK(cfl_dt(zero, 0.5) == doctest::Approx(default_dt_max(g)));

    const GridSpec g2(10, 10, 0, 0, 1, 1); // h = 0.1
    GridVectorField unit(g2);
    unit.v(5, 5) = 1.0;
    CHECK(cfl_dt(unit, 1.0) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK_THROWS_WITH_AS(cfl_dt(unit, 1.5), doctest::Contains("BadSafety"), Error);
}

TEST_CASE("step_upwind: zero velocity leaves the density untouched") {
    const GridSpec g(24, 24, 0, 0, 1, 1);
    const GridDensity d = sample_density(blob(), g);
    const GridDensity out = step_upwind(d, GridVectorField(g), 0.01);
    for (std::size_t k = 0; k < d.values.size(); ++k) CHECK(out.values[k] == d.values[k]);
}

TEST_CASE("step_upwind: mass conserved to 1e-14 per step, positivity held") {
    const GridSpec g(48, 48, 0, 0, 1, 1);
    GridDensity d = sample_density(blob(), g);
    GridVectorField v(g);
    CounterRng rng(17, 0);
    for (std::size_t k = 0; k < v.vx.size(); ++k) {
        v.vx[k] = rng.next_in(-1, 1);
        v.vy[k] = rng.next_in(-1, 1);
    }
    const double dt = cfl_dt(v, 0.45);
    double mass_prev = total_mass(d);
    for (int s = 0; s < 25; ++s) {
        d = step_upwind(d, v, dt);
        const double mass = total_mass(d);
        CHECK(std::abs(mass - mass_prev) <= 1e-14);
        mass_prev = mass;
        for (double val : d.values) CHECK(val >= 0.0);
    }
}

TEST_CASE("step_upwind: CFL violation is rejected") {
    const GridSpec g(32, 32, 0, 0, 1, 1);
    const GridDensity d = sample_density(blob(), g);
    GridVectorField v(g);
    v.u(10, 10) = 4.0;
    CHECK_THROWS_WITH_AS(step_upwind(d, v, 0.05), doctest::Contains("CflViolation"), Error);
}

TEST_CASE("solve_continuity: T = 0 is the identity") {
    const GridSpec g(24, 24, 0, 0, 1, 1);
    const GridDensity d = sample_density(blob(), g);
    const ContinuityResult res = solve_continuity(d, VectorFieldSpec::constant({1, 0}), 0.0, 0.5);
    CHECK(res.records.empty());
    for (std::size_t k = 0; k < d.values.size(); ++k) CHECK(res.rho.values[k] == d.values[k]);
}

TEST_CASE("solve_continuity: translate preset moves the centroid by 10h within h") {
    const GridSpec g(64, 64, 0, 0, 1, 1);
    const GridDensity d0 = sample_density(blob({0.3, 0.5}, 0.07), g);
    const Vec2 v{0.8, 0.0};
    const double T = 10.0 * g.hx() / v.x;
    const ContinuityResult res = solve_continuity(d0, VectorFieldSpec::constant(v), T, 0.45);
    const Vec2 shift = centroid(res.rho) - centroid(d0);
    CHECK(std::abs(shift.x - 10.0 * g.hx()) <= g.hx());
    CHECK(std::abs(shift.y) <= g.hy());
}

TEST_CASE("solve_continuity: 1000-step mass drift below 1e-9 for a gradient field") {
    const GridSpec g(48, 48, 0, 0, 1, 1);
    const GridDensity d0 = sample_density(blob({0.5, 0.5}, 0.1), g);
    const VectorFieldSpec field =
        VectorFieldSpec::gradient(gaussian_potential({0.45, 0.55}, 0.12, 0.05));
    // pick T to force ~1000 CFL-limited steps
    detail::FaceVelocity f = detail::faces_from_spec(field, g);
    double vmax = 0.0;
    for (double u : f.u) vmax = std::max(vmax, std::abs(u));
    for (double w : f.v) vmax = std::max(vmax, std::abs(w));
    const double dt = 0.45 * g.hx() / vmax;
    const ContinuityResult res = solve_continuity(d0, field, 1000.0 * dt, 0.45);
    CHECK(res.records.size() >= 1000);
    double max_step_err = 0.0;
    double prev = 1.0;
    for (const StepRecord& r : res.records) {
        max_step_err = std::max(max_step_err, std::abs(r.mass - prev));
        prev = r.mass;
        CHECK(r.min_rho >= 0.0);
    }
    CHECK(max_step_err <= 1e-12);
    CHECK(std::abs(res.records.back().mass - 1.0) <= 1e-9);
}

TEST_CASE("donor cell converges ~O(h) against the Lagrangian oracle (ratio 1.7..2.3)") {
    const Vec2 v{0.7, 0.2};
    const double T = 0.25;
    auto error_at = [&](int n) {
        const GridSpec g(n, n, 0, 0, 1, 1);
        const GridDensity d0 = sample_density(blob({0.3, 0.45}, 0.08), g);
        const ContinuityResult up = solve_continuity(d0, VectorFieldSpec::constant(v), T, 0.45);
        const PushedDensity lag =
            pushforward_density_via_flow(d0, VectorFieldSpec::constant(v), T, 64);
        return l1_distance(up.rho, lag.rho);
    };
    const double e1 = error_at(64);
    const double e2 = error_at(128);
    const double ratio = e1 / e2;
    CHECK(ratio >= 1.7);
    CHECK(ratio <= 2.3);
}

TEST_CASE("weak-form residual shrinks under space-time refinement") {
    const VectorFieldSpec field =
        VectorFieldSpec::gradient(gaussian_potential({0.48, 0.52}, 0.14, 0.08));
    const double T = 0.1;
    // psi in C_0((0,T) x box): gaussian space factor, t(T-t) time window
    struct TestFn {
        Vec2 c;
        double s;
        double weight(double t, double T_) const { return t * (T_ - t); }
        double dweight(double t, double T_) const { return T_ - 2 * t; }
    };
    const TestFn psis[2] = {{{0.45, 0.5}, 0.1}, {{0.55, 0.45}, 0.13}};

    auto residual = [&](int n) {
        const GridSpec g(n, n, 0, 0, 1, 1);
        const GridDensity d0 = sample_density(blob({0.5, 0.5}, 0.1), g);
        GridDensity prev = d0;
        double t = 0.0;
        double worst = 0.0;
        // integrate the weak form with midpoint-in-time, midpoint-in-space sums
        for (const TestFn& psi : psis) {
            KahanAccumulator acc;
            GridDensity cur = d0;
            t = 0.0;
            while (t < T) {
                const double dt = std::min(cfl_dt(field, g, 0.4), T - t);
                const GridDensity next = step_upwind(cur, field, dt);
                const double tm = t + 0.5 * dt;
                for (int j = 0; j < g.ny; ++j)
                    for (int i = 0; i < g.nx; ++i) {
                        const Vec2 x = g.center(i, j);
                        const double rho_mid = 0.5 * (cur.at(i, j) + next.at(i, j));
                        const double space = std::exp(-(x - psi.c).norm2() / (2 * psi.s * psi.s));
                        const Vec2 grad_space =
                            (psi.c - x) * (space / (psi.s * psi.s)) * psi.weight(tm, T);
                        const double dpsi_dt = space * psi.dweight(tm, T);
                        acc.add((dpsi_dt + grad_space.dot(evaluate_field(field, x)))
                                * rho_mid * g.cell_area() * dt);
                    }
                cur = next;
                t += dt;
            }
            worst = std::max(worst, std::abs(acc.value()));
        }
        return worst;
    };
    const double r1 = residual(32);
    const double r2 = residual(64);
    CHECK(r2 < r1);
    CHECK(r1 / r2 > 1.3);
}
