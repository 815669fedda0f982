// Acceptance suite: runs every top-level criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exit code = number of
// failures.

#include "wassflow/driver.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace wassflow;

namespace {

int failures = 0;

struct Criterion {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

void run_criterion(int index, const std::string& title, double time_budget_s,
                   const std::function<void(Criterion&)>& body) {
    Criterion c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.ok = false;
        c.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (time_budget_s > 0.0 && secs > time_budget_s) {
        c.ok = false;
        c.detail += (c.detail.empty() ? "" : "; ") + std::string("over time budget");
    }
    std::printf("[%s] criterion %d: %s (%.1fs)%s%s\n", c.ok ? "PASS" : "FAIL", index,
                title.c_str(), secs, c.detail.empty() ? "" : " -- ", c.detail.c_str());
    std::fflush(stdout);
    if (!c.ok) ++failures;
}

double worst_rel_err(const std::vector<DerivativeReport>& reports, const std::string& prefix) {
    double worst = 0.0;
    for (const auto& r : reports)
        if (r.test.rfind(prefix, 0) == 0) worst = std::max(worst, r.rel_err);
    return worst;
}

} // namespace

// --- criterion bodies -------------------------------------------------------

static void criterion_shape(Criterion& c) {
    const auto s1 = driver::battery::shape1();
    const auto s2 = driver::battery::shape2();
    c.require(s1.size() == 12, "expected 12 shape1 reports");
    c.require(s2.size() == 12, "expected 12 shape2 reports");
    for (const auto& r : s1)
        c.require(r.rel_err <= 1e-3, r.test + " rel_err " + std::to_string(r.rel_err));
    for (const auto& r : s2)
        c.require(r.rel_err <= 1e-3, r.test + " rel_err " + std::to_string(r.rel_err));
}

static void criterion_top(Criterion& c) {
    const auto reports = driver::battery::top();
    int volume_count = 0, weighted_count = 0;
    for (const auto& r : reports) {
        if (r.test.rfind("top.volume", 0) == 0) {
            ++volume_count;
            c.require(r.rel_err <= 1e-3, r.test + " rel_err " + std::to_string(r.rel_err));
            c.require(r.fit_exponent >= 1.9 && r.fit_exponent <= 2.1,
                      r.test + " exponent " + std::to_string(r.fit_exponent));
        } else {
            ++weighted_count;
            c.require(r.rel_err <= 1e-3, r.test + " rel_err " + std::to_string(r.rel_err));
        }
    }
    c.require(volume_count == 2, "expected volume reports for 2 eps");
    c.require(weighted_count == 2, "expected weighted reports for 2 eps");
}

static void criterion_dens(Criterion& c) {
    const GridSpec grid(64, 64, 0, 0, 1, 1);
    const auto reports = driver::battery::dens(grid, 42);
    int linear_count = 0, compliance_count = 0;
    for (const auto& r : reports) {
        if (r.test.rfind("dens.linear", 0) == 0) {
            ++linear_count;
            c.require(r.rel_err <= 1e-6, r.test + " rel_err " + std::to_string(r.rel_err));
        } else {
            ++compliance_count;
            c.require(r.rel_err <= 2e-2, r.test + " rel_err " + std::to_string(r.rel_err));
        }
    }
    c.require(linear_count == 5, "expected 5 linear potentials");
    c.require(compliance_count == 5, "expected 5 compliance potentials");
}

static void criterion_transport(Criterion& c) {
    // per-step mass error and 1000-step drift
    const GridSpec g(48, 48, 0, 0, 1, 1);
    const GridDensity d0 = sample_density(gaussian_mixture({{{0.5, 0.5}, 0.1, 1.0}}), g);
    const VectorFieldSpec field =
        VectorFieldSpec::gradient(gaussian_potential({0.45, 0.55}, 0.12, 0.05));
    const double dt = cfl_dt(field, g, 0.45);
    const ContinuityResult res = solve_continuity(d0, field, 1000.0 * dt, 0.45);
    c.require(res.records.size() >= 1000, "expected >= 1000 steps");
    double prev = 1.0, worst_step = 0.0;
    for (const auto& r : res.records) {
        worst_step = std::max(worst_step, std::abs(r.mass - prev));
        prev = r.mass;
    }
    c.require(worst_step <= 1e-12, "per-step mass error " + std::to_string(worst_step));
    c.require(std::abs(res.records.back().mass - 1.0) <= 1e-9,
              "1000-step drift " + std::to_string(std::abs(res.records.back().mass - 1.0)));

    // L1 refinement ratio against the Lagrangian oracle on a translated blob
    const Vec2 v{0.7, 0.2};
    const double T = 0.25;
    auto err_at = [&](int n) {
        const GridSpec gr(n, n, 0, 0, 1, 1);
        const GridDensity rho0 = sample_density(gaussian_mixture({{{0.3, 0.45}, 0.08, 1.0}}), gr);
        const ContinuityResult up = solve_continuity(rho0, VectorFieldSpec::constant(v), T, 0.45);
        const PushedDensity lag =
            pushforward_density_via_flow(rho0, VectorFieldSpec::constant(v), T, 64);
        double err = 0.0;
        for (std::size_t k = 0; k < up.rho.values.size(); ++k)
            err += std::abs(up.rho.values[k] - lag.rho.values[k]);
        return err * gr.cell_area();
    };
    const double ratio = err_at(64) / err_at(128);
    c.require(ratio >= 1.7 && ratio <= 2.3, "refinement ratio " + std::to_string(ratio));
}

static void criterion_ot(Criterion& c) {
    const std::uint64_t seed = 42;
    double err_bf = 0.0;
    for (int k = 0; k < 50; ++k) {
        const int n = 2 + static_cast<int>(mix64(seed, 500 + static_cast<std::uint64_t>(k)) % 7);
        const ParticleMeasure mu = seeded_cloud(seed, 2 * static_cast<std::uint64_t>(k), n);
        const ParticleMeasure nu = seeded_cloud(seed, 2 * static_cast<std::uint64_t>(k) + 1, n);
        err_bf = std::max(err_bf, std::abs(w2_exact(mu, nu).value - w2_bruteforce(mu, nu)));
    }
    c.require(err_bf <= 1e-10, "exact vs brute force " + std::to_string(err_bf));

    double err_1d = 0.0;
    for (int k = 0; k < 20; ++k) {
        CounterRng rng(seed, 4000 + static_cast<std::uint64_t>(k) * 64);
        const int n = 2 + static_cast<int>(rng.next_u64() % 7);
        std::vector<Vec2> xs, ys;
        const double ycoord = rng.next_in(-0.5, 0.5);
        for (int q = 0; q < n; ++q) xs.push_back({rng.next_in(-1, 1), ycoord});
        for (int q = 0; q < n; ++q) ys.push_back({rng.next_in(-1, 1), ycoord});
        const ParticleMeasure mu = ParticleMeasure::equal_weights(xs);
        const ParticleMeasure nu = ParticleMeasure::equal_weights(ys);
        err_1d = std::max(err_1d, std::abs(w2_1d(mu, nu) - w2_exact(mu, nu).value));
    }
    c.require(err_1d <= 1e-10, "1d vs exact " + std::to_string(err_1d));

    double violation = 0.0;
    for (int k = 0; k < 50; ++k) {
        const int n = 2 + static_cast<int>(mix64(seed, 900 + static_cast<std::uint64_t>(k)) % 7);
        const ParticleMeasure a = seeded_cloud(seed, 300 + 3 * static_cast<std::uint64_t>(k), n);
        const ParticleMeasure b = seeded_cloud(seed, 301 + 3 * static_cast<std::uint64_t>(k), n);
        const ParticleMeasure d = seeded_cloud(seed, 302 + 3 * static_cast<std::uint64_t>(k), n);
        violation = std::max(violation, w2_exact(a, d).value
                                            - (w2_exact(a, b).value + w2_exact(b, d).value));
    }
    c.require(violation <= 1e-10, "triangle violation " + std::to_string(violation));

    const double dirac =
        w2_exact(ParticleMeasure::dirac({0, 0}), ParticleMeasure::dirac({3, 4})).value;
    c.require(std::abs(dirac - 5.0 / std::sqrt(2.0)) <= 1e-14,
              "dirac value " + std::to_string(dirac));
}

static void criterion_flows(Criterion& c) {
    const Vec2 x{0.8, -0.55};
    const FlowMapResult rot = flow_map(VectorFieldSpec::rotation(), x, 2.0 * kPi, 1000);
    c.require((rot.position - x).norm() <= 1e-6,
              "rotation period error " + std::to_string((rot.position - x).norm()));

    const Potential pots[3] = {
        gaussian_potential({0.3, -0.2}, 0.5, 0.4),
        gaussian_potential({-0.1, 0.4}, 0.3, -0.25),
        gaussian_potential({0.0, 0.0}, 0.8, 0.6),
    };
    const double t = 0.5;
    for (const Potential& p : pots) {
        const VectorFieldSpec field = VectorFieldSpec::gradient(p);
        const double bound = std::exp(t * hessian_bound(field)) * (1.0 + 1e-6);
        CounterRng rng(3, 0);
        for (int k = 0; k < 100; ++k) {
            const Vec2 y{rng.next_in(-1, 1), rng.next_in(-1, 1)};
            const FlowMapResult r = flow_map(field, y, t, 200);
            if (r.jacobian.opnorm() > bound) {
                c.require(false, "jacobian bound violated");
                break;
            }
        }
    }

    const double eps = 0.2;
    const VectorFieldSpec hole = VectorFieldSpec::hole({0, 0}, eps);
    const double got = radial_flow(hole, 1.5 * eps, 0.1 * eps);
    const double oracle = radial_flow(hole, 1.5 * eps, 0.1 * eps, 200000);
    c.require(std::abs(got - oracle) <= 1e-10, "radial flow vs oracle "
                                                   + std::to_string(std::abs(got - oracle)));
}

static void criterion_elasticity(Criterion& c) {
    // manufactured solution: nodal error order over three refinements
    const MaterialLaw law(1.0, 1.5, 1.0, 0.5, 1.0);
    auto u_star = [](Vec2 p) {
        const double b = p.x * (1 - p.x) * p.y * (1 - p.y);
        return Vec2{b, b * (p.x + 0.5 * p.y)};
    };
    auto load = [&](Vec2 p) {
        const double h = 1e-4;
        auto d2 = [&](Vec2 xx, int dir1, int dir2) {
            auto shift = [&](Vec2 y, int dir, double s) {
                return dir == 0 ? Vec2{y.x + s, y.y} : Vec2{y.x, y.y + s};
            };
            if (dir1 == dir2)
                return (u_star(shift(xx, dir1, h)) - u_star(xx) * 2.0 + u_star(shift(xx, dir1, -h)))
                       / (h * h);
            return (u_star(shift(shift(xx, dir1, h), dir2, h))
                    - u_star(shift(shift(xx, dir1, h), dir2, -h))
                    - u_star(shift(shift(xx, dir1, -h), dir2, h))
                    + u_star(shift(shift(xx, dir1, -h), dir2, -h)))
                   / (4 * h * h);
        };
        const Vec2 uxx = d2(p, 0, 0), uyy = d2(p, 1, 1), uxy = d2(p, 0, 1);
        const Vec2 lap = uxx + uyy;
        const Vec2 grad_div{uxx.x + uxy.y, uxy.x + uyy.y};
        const double b0 = law.b(0.5);
        return u_star(p) * law.delta - (lap * law.mu + grad_div * (law.mu + law.lambda)) * b0;
    };
    auto err_at = [&](int n) {
        const GridSpec g(n, n, 0, 0, 1, 1);
        BoundaryCondition bc;
        bc.dirichlet = {{Side::Left, 0, g.ny}, {Side::Right, 0, g.ny},
                        {Side::Bottom, 0, g.nx}, {Side::Top, 0, g.nx}};
        bc.body_load = load;
        const ElasticSystem sys = assemble(GridDensity(g, 0.5), law, bc);
        const ElasticField u = solve_state(sys);
        double err = 0.0;
        for (int j = 0; j <= g.ny; ++j)
            for (int i = 0; i <= g.nx; ++i)
                err = std::max(err, (u.displacement(sys.node(i, j))
                                     - u_star({i * g.hx(), j * g.hy()})).norm());
        return err;
    };
    const double e8 = err_at(8), e16 = err_at(16), e32 = err_at(32);
    const double p1 = std::log2(e8 / e16), p2 = std::log2(e16 / e32);
    c.require(p1 >= 1.8, "order " + std::to_string(p1));
    c.require(p2 >= 1.8, "order " + std::to_string(p2));

    // compliance vs energy, F >= 0
    const GridSpec g(32, 32, 0, 0, 1, 1);
    const MaterialLaw claw(1.0, 1.0, 1.0, 1e-3, 1.0);
    const GridDensity rho = sample_density(seeded_mixture(g, 4, 0, 3, wide_mixture_shape()), g);
    BoundaryCondition bc;
    bc.dirichlet.push_back({Side::Left, 0, g.ny});
    bc.tractions.push_back({{Side::Right, 0, g.ny}, Vec2{0.0, -1.0}});
    const ElasticSystem sys = assemble(rho, claw, bc);
    const ElasticField u = solve_state(sys);
    const double J = compliance(sys, u);
    c.require(std::abs(J - energy(sys, u)) / std::abs(J) <= 1e-8,
              "compliance vs energy gap");
    const std::vector<double> F = sensitivity_F(rho, u, claw);
    for (double f : F)
        if (f < 0.0) {
            c.require(false, "negative sensitivity with b' > 0");
            break;
        }
}

static void criterion_optimizer(Criterion& c) {
    const GridSpec g(48, 48, 0, 0, 1, 1);
    const GridDensity rho0 = sample_density(seeded_mixture(g, 42, 0), g);
    FlowConfig cfg;
    cfg.objective = QuadraticObjective{{0.5, 0.5}};
    cfg.max_steps = 100;
    const RunResult run = run_gradient_flow(rho0, cfg);
    c.require(run.log.entries.size() == 100, "expected 100 steps");
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& e : run.log.entries) {
        if (e.objective > prev + 1e-12) {
            c.require(false, "objective increased at step " + std::to_string(e.step));
            break;
        }
        prev = e.objective;
    }
    for (const auto& e : run.log.entries)
        if (std::abs(e.mass - 1.0) > 1e-9) {
            c.require(false, "mass drift " + std::to_string(std::abs(e.mass - 1.0)));
            break;
        }

    // zero-gradient objective is exactly stationary
    FlowConfig stat;
    stat.objective = ConstantObjective{1.0};
    stat.max_steps = 5;
    const RunResult fixed = run_gradient_flow(rho0, stat);
    for (std::size_t k = 0; k < rho0.values.size(); ++k)
        if (fixed.rho.values[k] != rho0.values[k]) {
            c.require(false, "stationary point moved");
            break;
        }

    // bitwise determinism of the run log
    const RunResult again = run_gradient_flow(rho0, cfg);
    auto serialize = [](const RunLog& log) {
        std::ostringstream os;
        os.precision(17);
        for (const auto& e : log.entries)
            os << e.step << ' ' << e.t << ' ' << e.dt << ' ' << e.objective << ' ' << e.mass
               << ' ' << e.vmax << ' ' << e.min_rho << ' ' << e.max_rho << '\n';
        return os.str();
    };
    c.require(serialize(run.log) == serialize(again.log), "run logs differ");
}

int main() {
    run_criterion(1, "shape derivatives (WassShape1/2 batteries)", 10.0, criterion_shape);
    run_criterion(2, "topological derivative (WassTop battery)", 5.0, criterion_top);
    run_criterion(3, "density sensitivities (WassDens batteries)", 60.0, criterion_dens);
    run_criterion(4, "transport conservation and refinement", 0.0, criterion_transport);
    run_criterion(5, "optimal transport oracles", 0.0, criterion_ot);
    run_criterion(6, "flow maps (rotation, Gronwall bound, radial oracle)", 0.0, criterion_flows);
    run_criterion(7, "elasticity (manufactured solution, energy identity)", 0.0, criterion_elasticity);
    run_criterion(8, "optimizer descent, stationarity, determinism", 0.0, criterion_optimizer);
    if (failures == 0) std::printf("acceptance: all criteria pass\n");
    else std::printf("acceptance: %d criterion(s) FAILED\n", failures);
    return failures;
}
