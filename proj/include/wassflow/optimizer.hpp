#pragma once

#include "wassflow/core.hpp"
#include "wassflow/elasticity.hpp"
#include "wassflow/grid.hpp"
#include "wassflow/transport.hpp"

#include <variant>
#include <vector>

namespace wassflow {

// ---------------------------------------------------------------------------
// Wasserstein gradient-flow driver: compute F, form v = -s grad F, take one
// CFL-limited donor-cell step, log, repeat.
// ---------------------------------------------------------------------------

struct QuadraticObjective { Vec2 center; };          // J = int |x-c|^2/2 rho
struct ConstantObjective { double value = 0.0; };    // grad F = 0: stationary
struct ComplianceFlowObjective {
    MaterialLaw law;
    BoundaryCondition bc;
};

using FlowObjective = std::variant<QuadraticObjective, ConstantObjective, ComplianceFlowObjective>;

struct FlowConfig {
    FlowObjective objective = QuadraticObjective{{0.0, 0.0}};
    double safety = 0.45;      // in (0,1]
    int max_steps = 100;
    double stop_tol = 0.0;     // relative |dJ|/|J|; 0 disables
    double rho_max = 0.0;      // density cap; 0 disables
    double beta = 0.0;         // smooth penalty beta * int rho^2
    double m_total = 1.0;
    std::uint64_t seed = 0;
    int descent_sign = 0;      // 0: resolve by directional probe at rho0

    void validate() const {
        if (!(safety > 0.0) || safety > 1.0) throw Error("BadConfig", "safety must be in (0,1]");
        if (max_steps < 0) throw Error("BadConfig", "max_steps must be >= 0");
        if (rho_max < 0.0 || beta < 0.0 || !(m_total > 0.0))
            throw Error("BadConfig", "rho_max, beta must be >= 0 and m_total > 0");
    }
};

struct RunLogEntry {
    int step = 0;
    double t = 0.0;
    double dt = 0.0;
    double objective = 0.0;
    double mass = 0.0;
    double vmax = 0.0;
    double min_rho = 0.0;
    double max_rho = 0.0;
    bool projected = false;
    double mass_before_projection = 0.0;
};

struct RunLog {
    std::vector<RunLogEntry> entries;
};

namespace detail {

struct ObjectiveEval {
    double value = 0.0;
    std::vector<double> F; // per cell, before the penalty term
};

inline ObjectiveEval evaluate_objective(const GridDensity& rho, const FlowConfig& cfg) {
    const GridSpec& g = rho.grid;
    ObjectiveEval ev;
    ev.F.resize(static_cast<std::size_t>(g.cells()));
    if (const auto* quad = std::get_if<QuadraticObjective>(&cfg.objective)) {
        KahanAccumulator acc;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double f = 0.5 * (g.center(i, j) - quad->center).norm2();
                ev.F[static_cast<std::size_t>(g.idx(i, j))] = f;
                acc.add(f * rho.at(i, j));
            }
        ev.value = acc.value() * g.cell_area();
    } else if (const auto* cst = std::get_if<ConstantObjective>(&cfg.objective)) {
        std::fill(ev.F.begin(), ev.F.end(), cst->value);
        ev.value = cst->value * total_mass(rho);
    } else {
        const auto& comp = std::get<ComplianceFlowObjective>(cfg.objective);
        const ElasticSystem sys = assemble(rho, comp.law, comp.bc, cfg.m_total);
        const ElasticField state = solve_state(sys);
        ev.value = compliance(sys, state);
        ev.F = sensitivity_F(rho, state, comp.law, cfg.m_total);
    }
    if (cfg.beta > 0.0) {
        KahanAccumulator pen;
        for (std::size_t k = 0; k < rho.values.size(); ++k) {
            pen.add(rho.values[k] * rho.values[k]);
            ev.F[k] += 2.0 * cfg.beta * rho.values[k];
        }
        ev.value += cfg.beta * pen.value() * g.cell_area();
    }
    return ev;
}

// The test, not intuition, fixes the sign: probe the objective by one small
// upwind step along +grad F and descend against the observed slope.
inline int resolve_descent_sign(const GridDensity& rho, const FlowConfig& cfg) {
    if (cfg.descent_sign != 0) return cfg.descent_sign >= 0 ? 1 : -1;
    const ObjectiveEval ev = evaluate_objective(rho, cfg);
    const GridVectorField gradF = wasserstein_gradient(ev.F, rho.grid);
    const double vmax = gradF.max_magnitude();
    if (vmax == 0.0) return 1;
    const double tau = 0.05 * std::min(rho.grid.hx(), rho.grid.hy()) / vmax;
    GridVectorField neg = gradF;
    for (auto& u : neg.vx) u = -u;
    for (auto& v : neg.vy) v = -v;
    const double j_plus = evaluate_objective(step_upwind(rho, gradF, tau), cfg).value;
    const double j_minus = evaluate_objective(step_upwind(rho, neg, tau), cfg).value;
    return (j_plus - j_minus) > 0.0 ? 1 : -1;
}

} // namespace detail

struct StepResult {
    GridDensity rho;
    RunLogEntry entry;
};

// One gradient-flow step. descent_sign 0 resolves the sign by probe (the run
// loop resolves once and reuses).
inline StepResult step(const GridDensity& rho, const FlowConfig& cfg) {
    cfg.validate();
    const int sign = detail::resolve_descent_sign(rho, cfg);

    const detail::ObjectiveEval ev = detail::evaluate_objective(rho, cfg);
    GridVectorField v = wasserstein_gradient(ev.F, rho.grid);
    const double scale = -static_cast<double>(sign);
    for (auto& u : v.vx) u *= scale;
    for (auto& w : v.vy) w *= scale;

    const double dt = cfl_dt(v, cfg.safety);
    if (dt < 1e-14) throw Error("StalledStep", "CFL step collapsed below 1e-14");

    StepResult res;
    res.rho = step_upwind(rho, v, dt);

    res.entry.projected = false;
    if (cfg.rho_max > 0.0) {
        bool clipped = false;
        for (double val : res.rho.values)
            if (val > cfg.rho_max) { clipped = true; break; }
        if (clipped) {
            res.entry.mass_before_projection = total_mass(res.rho);
            for (double& val : res.rho.values) val = std::min(val, cfg.rho_max);
            res.rho = normalize(res.rho);
            res.entry.projected = true;
        }
    }

    res.entry.dt = dt;
    res.entry.vmax = v.max_magnitude();
    res.entry.objective = detail::evaluate_objective(res.rho, cfg).value;
    res.entry.mass = total_mass(res.rho);
    res.entry.min_rho = *std::min_element(res.rho.values.begin(), res.rho.values.end());
    res.entry.max_rho = *std::max_element(res.rho.values.begin(), res.rho.values.end());
    return res;
}

struct RunResult {
    GridDensity rho;
    RunLog log;
};

using StepObserver = std::function<void(int step, const GridDensity&)>;

inline RunResult run_gradient_flow(const GridDensity& rho0, const FlowConfig& cfg,
                                   const StepObserver& observer = {}) {
    cfg.validate();
    FlowConfig resolved = cfg;
    if (resolved.max_steps > 0)
        resolved.descent_sign = detail::resolve_descent_sign(rho0, cfg);

    RunResult res{rho0, {}};
    double t = 0.0;
    double prev_objective = 0.0;
    bool have_prev = false;
    for (int k = 0; k < resolved.max_steps; ++k) {
        StepResult s = step(res.rho, resolved);
        t += s.entry.dt;
        s.entry.step = k + 1;
        s.entry.t = t;
        res.rho = std::move(s.rho);
        res.log.entries.push_back(s.entry);
        if (observer) observer(k + 1, res.rho);
        if (have_prev && resolved.stop_tol > 0.0) {
            const double rel = std::abs(s.entry.objective - prev_objective)
                / std::max(std::abs(prev_objective), 1e-300);
            if (rel < resolved.stop_tol) break;
        }
        prev_objective = s.entry.objective;
        have_prev = true;
    }
    return res;
}

} // namespace wassflow
