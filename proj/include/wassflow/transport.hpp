#pragma once

#include "wassflow/core.hpp"
#include "wassflow/fields.hpp"
#include "wassflow/grid.hpp"

#include <variant>
#include <vector>

namespace wassflow {

// Cell-centered velocity data; the discrete home of theta when it only
// exists as grid values (optimizer runs).
struct GridVectorField {
    GridSpec grid;
    std::vector<double> vx, vy;

    GridVectorField() = default;
    explicit GridVectorField(const GridSpec& g)
        : grid(g),
          vx(static_cast<std::size_t>(g.cells()), 0.0),
          vy(static_cast<std::size_t>(g.cells()), 0.0) {}

    double u(int i, int j) const { return vx[static_cast<std::size_t>(grid.idx(i, j))]; }
    double v(int i, int j) const { return vy[static_cast<std::size_t>(grid.idx(i, j))]; }
    double& u(int i, int j) { return vx[static_cast<std::size_t>(grid.idx(i, j))]; }
    double& v(int i, int j) { return vy[static_cast<std::size_t>(grid.idx(i, j))]; }

    double max_magnitude() const {
        double m = 0.0;
        for (std::size_t k = 0; k < vx.size(); ++k)
            m = std::max(m, std::sqrt(vx[k] * vx[k] + vy[k] * vy[k]));
        return m;
    }
};

inline double default_dt_max(const GridSpec& g) { return 1e-2 * g.diameter(); }

// dt = safety * min(hx,hy) / max|v|; dt_max cap takes over at stationary
// points (max|v| = 0).
inline double cfl_dt(const GridVectorField& v, double safety, double dt_max) {
    if (!(safety > 0.0) || safety > 1.0) throw Error("BadSafety", "safety must be in (0,1]");
    const double vmax = v.max_magnitude();
    if (vmax == 0.0) return dt_max;
    return safety * std::min(v.grid.hx(), v.grid.hy()) / vmax;
}

inline double cfl_dt(const GridVectorField& v, double safety) {
    return cfl_dt(v, safety, default_dt_max(v.grid));
}

// Analytic field: bound taken over cell centers.
inline double cfl_dt(const VectorFieldSpec& spec, const GridSpec& g, double safety,
                     double dt_max = 0.0) {
    if (!(safety > 0.0) || safety > 1.0) throw Error("BadSafety", "safety must be in (0,1]");
    if (dt_max <= 0.0) dt_max = default_dt_max(g);
    double vmax = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            vmax = std::max(vmax, evaluate_field(spec, g.center(i, j)).norm());
    if (vmax == 0.0) return dt_max;
    return safety * std::min(g.hx(), g.hy()) / vmax;
}

namespace detail {

// Normal velocities at cell faces; boundary faces are zero (no-flux box).
struct FaceVelocity {
    GridSpec grid;
    std::vector<double> u; // (nx+1) x ny x-faces, index j*(nx+1)+i
    std::vector<double> v; // nx x (ny+1) y-faces, index j*nx+i

    explicit FaceVelocity(const GridSpec& g)
        : grid(g),
          u(static_cast<std::size_t>((g.nx + 1) * g.ny), 0.0),
          v(static_cast<std::size_t>(g.nx * (g.ny + 1)), 0.0) {}

    double& ux(int i, int j) { return u[static_cast<std::size_t>(j * (grid.nx + 1) + i)]; }
    double ux(int i, int j) const { return u[static_cast<std::size_t>(j * (grid.nx + 1) + i)]; }
    double& vy(int i, int j) { return v[static_cast<std::size_t>(j * grid.nx + i)]; }
    double vy(int i, int j) const { return v[static_cast<std::size_t>(j * grid.nx + i)]; }
};

// Cell-centered data: faces take arithmetic means of the two adjacent cells.
inline FaceVelocity faces_from_cells(const GridVectorField& w) {
    FaceVelocity f(w.grid);
    const GridSpec& g = w.grid;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i)
            f.ux(i, j) = 0.5 * (w.u(i - 1, j) + w.u(i, j));
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            f.vy(i, j) = 0.5 * (w.v(i, j - 1) + w.v(i, j));
    return f;
}

// Analytic field: evaluate at face midpoints directly.
inline FaceVelocity faces_from_spec(const VectorFieldSpec& spec, const GridSpec& g) {
    FaceVelocity f(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) {
            const Vec2 p{g.x0 + i * g.hx(), g.y0 + (j + 0.5) * g.hy()};
            f.ux(i, j) = evaluate_field(spec, p).x;
        }
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const Vec2 p{g.x0 + (i + 0.5) * g.hx(), g.y0 + j * g.hy()};
            f.vy(i, j) = evaluate_field(spec, p).y;
        }
    return f;
}

// Donor-cell (first-order upwind) conservative update.
inline GridDensity upwind_step(const GridDensity& d, const FaceVelocity& f, double dt) {
    const GridSpec& g = d.grid;
    GridDensity out(g);
    const double rx = dt / g.hx();
    const double ry = dt / g.hy();
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            auto flux_x = [&](int face_i) -> double {
                const double u = f.ux(face_i, j);
                if (u >= 0.0) return face_i > 0 ? u * d.at(face_i - 1, j) : 0.0;
                return face_i < g.nx ? u * d.at(face_i, j) : 0.0;
            };
            auto flux_y = [&](int face_j) -> double {
                const double v = f.vy(i, face_j);
                if (v >= 0.0) return face_j > 0 ? v * d.at(i, face_j - 1) : 0.0;
                return face_j < g.ny ? v * d.at(i, face_j) : 0.0;
            };
            out.at(i, j) = d.at(i, j)
                - rx * (flux_x(i + 1) - flux_x(i))
                - ry * (flux_y(j + 1) - flux_y(j));
        }
    return out;
}

} // namespace detail

inline GridDensity step_upwind(const GridDensity& d, const GridVectorField& v, double dt) {
    const double bound = cfl_dt(v, 1.0, std::numeric_limits<double>::infinity());
    if (dt > bound * (1.0 + 1e-12))
        throw Error("CflViolation", "dt exceeds the CFL bound");
    return detail::upwind_step(d, detail::faces_from_cells(v), dt);
}

inline GridDensity step_upwind(const GridDensity& d, const VectorFieldSpec& spec, double dt) {
    const detail::FaceVelocity f = detail::faces_from_spec(spec, d.grid);
    double vmax = 0.0;
    for (double u : f.u) vmax = std::max(vmax, std::abs(u));
    for (double v : f.v) vmax = std::max(vmax, std::abs(v));
    if (vmax > 0.0 && dt > std::min(d.grid.hx(), d.grid.hy()) / vmax * (1.0 + 1e-12))
        throw Error("CflViolation", "dt exceeds the CFL bound");
    return detail::upwind_step(d, f, dt);
}

// Per-step record of a continuity-equation run; exported as JSON lines.
struct StepRecord {
    int step = 0;
    double t = 0.0;
    double dt = 0.0;
    double mass = 0.0;
    double min_rho = 0.0;
    double max_rho = 0.0;
};

inline StepRecord make_record(int step, double t, double dt, const GridDensity& d) {
    StepRecord r{step, t, dt, total_mass(d), d.values[0], d.values[0]};
    for (double v : d.values) {
        r.min_rho = std::min(r.min_rho, v);
        r.max_rho = std::max(r.max_rho, v);
    }
    return r;
}

struct ContinuityResult {
    GridDensity rho;
    std::vector<StepRecord> records;
};

using VelocitySource = std::variant<VectorFieldSpec, GridVectorField>;

// Repeated donor-cell steps with CFL-limited dt until time T (final partial
// step allowed).
inline ContinuityResult solve_continuity(const GridDensity& d0, const VelocitySource& field,
                                         double T, double safety,
                                         double dt_max = 0.0) {
    if (T < 0.0) throw Error("BadTime", "T must be >= 0");
    if (dt_max <= 0.0) dt_max = default_dt_max(d0.grid);

    const GridSpec& g = d0.grid;
    detail::FaceVelocity faces(g);
    double vmax = 0.0;
    if (const auto* spec = std::get_if<VectorFieldSpec>(&field)) {
        faces = detail::faces_from_spec(*spec, g);
    } else {
        faces = detail::faces_from_cells(std::get<GridVectorField>(field));
    }
    for (double u : faces.u) vmax = std::max(vmax, std::abs(u));
    for (double v : faces.v) vmax = std::max(vmax, std::abs(v));
    const double dt_cfl = vmax > 0.0
        ? safety * std::min(g.hx(), g.hy()) / vmax
        : dt_max;

    ContinuityResult res{d0, {}};
    double t = 0.0;
    int step = 0;
    while (t < T) {
        const double dt = std::min(dt_cfl, T - t);
        res.rho = detail::upwind_step(res.rho, faces, dt);
        t += dt;
        ++step;
        res.records.push_back(make_record(step, t, dt, res.rho));
    }
    return res;
}

} // namespace wassflow
