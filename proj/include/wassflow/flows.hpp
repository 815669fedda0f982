#pragma once

#include "wassflow/core.hpp"
#include "wassflow/fields.hpp"
#include "wassflow/grid.hpp"

#include <cmath>
#include <functional>

namespace wassflow {

// Phi_t(x) together with grad Phi_t(x) from the variational equation
// d/dt (grad Phi) = grad theta(Phi) * grad Phi, grad Phi_0 = I.
struct FlowMapResult {
    Vec2 position;
    Mat2 jacobian;
    double det = 1.0;
};

namespace detail {

struct FlowState {
    Vec2 x;
    Mat2 J;
};

inline FlowState flow_rhs(const VectorFieldSpec& spec, const FlowState& s) {
    return {evaluate_field(spec, s.x), field_jacobian(spec, s.x) * s.J};
}

inline FlowState axpy(const FlowState& s, const FlowState& k, double a) {
    return {s.x + k.x * a, s.J + k.J * a};
}

inline void check_finite(const FlowState& s) {
    if (!s.x.finite() || !s.J.finite())
        throw Error("NonfiniteState", "flow integration overflowed");
}

inline void check_singular(const VectorFieldSpec& spec, const FlowState& s) {
    if (spec.is_hole()) {
        const HoleField& h = spec.hole_data();
        if ((s.x - h.x0).norm() < 1e-12 * h.eps)
            throw Error("SingularTrajectory", "trajectory entered the singular center");
    }
}

} // namespace detail

// Classical 4th-order one-step integration of the position ODE coupled with
// the variational equation. Fixed step count; t may be negative.
inline FlowMapResult flow_map(const VectorFieldSpec& spec, Vec2 x, double t, int steps) {
    if (steps < 1) throw Error("BadSteps", "steps must be >= 1");
    detail::FlowState s{x, Mat2::identity()};
    const double dt = t / steps;
    const bool hole = spec.is_hole();
    double r_prev = hole ? (x - spec.hole_data().x0).norm() : 0.0;
    for (int n = 0; n < steps; ++n) {
        detail::check_singular(spec, s);
        const auto k1 = detail::flow_rhs(spec, s);
        const auto k2 = detail::flow_rhs(spec, detail::axpy(s, k1, dt / 2));
        const auto k3 = detail::flow_rhs(spec, detail::axpy(s, k2, dt / 2));
        const auto k4 = detail::flow_rhs(spec, detail::axpy(s, k3, dt));
        s.x += (k1.x + k2.x * 2.0 + k3.x * 2.0 + k4.x) * (dt / 6.0);
        s.J += (k1.J + k2.J * 2.0 + k3.J * 2.0 + k4.J) * (dt / 6.0);
        detail::check_finite(s);
        if (hole) {
            // The radial speed is bounded by ~1; a shrinking radius within a
            // few step lengths of the center means the trajectory is about to
            // cross the singularity between samples.
            const double r = (s.x - spec.hole_data().x0).norm();
            if (r < r_prev && r < 3.0 * std::abs(dt))
                throw Error("SingularTrajectory", "trajectory approaches the singular center");
            r_prev = r;
        }
    }
    detail::check_singular(spec, s);
    return {s.x, s.J, s.J.det()};
}

// Radius of Phi_t applied to any point at distance r0 from the hole center
// (rotational symmetry): scalar ODE dr/dt = eta'(r) r + eta(r).
// Step count 0 picks a fine default (the op is an oracle target at 1e-10).
inline double radial_flow(const VectorFieldSpec& spec, double r0, double t, int steps = 0) {
    const HoleField& h = spec.hole_data();
    if (!(r0 > 0.0)) throw Error("BadRadius", "r0 must be > 0");
    if (t < 0.0) throw Error("BadTime", "t must be >= 0");
    if (t == 0.0) return r0;
    if (steps <= 0)
        steps = std::max(2000, static_cast<int>(std::ceil(4000.0 * t / h.eps)));
    auto g = [&](double r) { return bump::deta(r, h.eps) * r + bump::eta(r, h.eps); };
    double r = r0;
    const double dt = t / steps;
    for (int n = 0; n < steps; ++n) {
        const double k1 = g(r);
        const double k2 = g(r + 0.5 * dt * k1);
        const double k3 = g(r + 0.5 * dt * k2);
        const double k4 = g(r + dt * k3);
        r += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        if (!std::isfinite(r)) throw Error("NonfiniteState", "radial flow overflowed");
    }
    return r;
}

// Positions and Jacobian determinants of one trajectory sampled at several
// times (ts ascending, all of one sign handled by the caller via sign).
// Integrates each segment once instead of restarting from t = 0.
inline std::vector<std::pair<Vec2, double>>
flow_samples(const VectorFieldSpec& spec, Vec2 x, const std::vector<double>& ts,
             double sign, int steps_total) {
    std::vector<std::pair<Vec2, double>> out;
    out.reserve(ts.size());
    detail::FlowState s{x, Mat2::identity()};
    double t_prev = 0.0;
    const double t_max = ts.empty() ? 0.0 : ts.back();
    for (double t : ts) {
        if (!(t > t_prev)) throw Error("BadSteps", "sample times must be ascending and positive");
        const double seg = (t - t_prev) * sign;
        const int steps = std::max(2, static_cast<int>(std::lround(steps_total * (t - t_prev) / t_max)));
        const double dt = seg / steps;
        for (int n = 0; n < steps; ++n) {
            detail::check_singular(spec, s);
            const auto k1 = detail::flow_rhs(spec, s);
            const auto k2 = detail::flow_rhs(spec, detail::axpy(s, k1, dt / 2));
            const auto k3 = detail::flow_rhs(spec, detail::axpy(s, k2, dt / 2));
            const auto k4 = detail::flow_rhs(spec, detail::axpy(s, k3, dt));
            s.x += (k1.x + k2.x * 2.0 + k3.x * 2.0 + k4.x) * (dt / 6.0);
            s.J += (k1.J + k2.J * 2.0 + k3.J * 2.0 + k4.J) * (dt / 6.0);
            detail::check_finite(s);
        }
        out.push_back({s.x, s.J.det()});
        t_prev = t;
    }
    return out;
}

struct PushedDensity {
    GridDensity rho;
    double mass_drift = 0.0;  // |mass - 1| before any renormalization
    bool renormalized = false;
};

namespace detail {

// rho_t(x) = rho(y) * det(grad Phi_{-t})(x)  with y = Phi_{-t}(x):
// the explicit change-of-variables density, evaluated backward along
// characteristics from each cell center.
inline PushedDensity pushforward_impl(const std::function<double(Vec2)>& rho0,
                                      const GridSpec& grid,
                                      const VectorFieldSpec& spec,
                                      double t, int steps) {
    GridDensity out(grid);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const FlowMapResult back = flow_map(spec, grid.center(i, j), -t, steps);
            out.at(i, j) = rho0(back.position) * back.det;
        }
    PushedDensity result;
    result.mass_drift = std::abs(total_mass(out) - 1.0);
    if (result.mass_drift > 1e-10) {
        out = normalize(out);
        result.renormalized = true;
    }
    result.rho = std::move(out);
    return result;
}

} // namespace detail

// Grid-sampled input density (bilinear interpolation along characteristics).
inline PushedDensity pushforward_density_via_flow(const GridDensity& d,
                                                  const VectorFieldSpec& spec,
                                                  double t, int steps) {
    if (t == 0.0) return {d, std::abs(total_mass(d) - 1.0), false};
    auto rho0 = [&d](Vec2 p) { return sample_bilinear(d, p); };
    return detail::pushforward_impl(rho0, d.grid, spec, t, steps);
}

// Analytic input density (verification path: no interpolation error enters
// t -> J(rho_t)).
inline PushedDensity pushforward_density_analytic(const AnalyticDensity& rho,
                                                  const GridSpec& grid,
                                                  const VectorFieldSpec& spec,
                                                  double t, int steps) {
    return detail::pushforward_impl(rho.value, grid, spec, t, steps);
}

} // namespace wassflow
