#pragma once

#include "wassflow/core.hpp"
#include "wassflow/elasticity.hpp"
#include "wassflow/fields.hpp"
#include "wassflow/flows.hpp"
#include "wassflow/grid.hpp"

#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace wassflow {

// ---------------------------------------------------------------------------
// Analytic shapes with exact volumes; boundaries tracked as polygons for
// shape-derivative tests, quadrature over the exact domain elsewhere.
// ---------------------------------------------------------------------------

struct Disk { Vec2 center; double radius = 1.0; };
struct Rectangle { Vec2 corner; double w = 1.0, h = 1.0; };
struct Annulus { Vec2 center; double r_in = 0.5, r_out = 1.0; };

using AnalyticShape = std::variant<Disk, Rectangle, Annulus>;

inline void validate_shape(const AnalyticShape& shape) {
    std::visit([](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disk>) {
            if (!(s.radius > 0.0)) throw Error("BadShape", "disk radius must be > 0");
        } else if constexpr (std::is_same_v<T, Rectangle>) {
            if (!(s.w > 0.0) || !(s.h > 0.0)) throw Error("BadShape", "rectangle sides must be > 0");
        } else {
            if (!(s.r_in > 0.0) || !(s.r_out > s.r_in))
                throw Error("BadShape", "annulus needs 0 < r_in < r_out");
        }
    }, shape);
}

inline double volume_objective(const AnalyticShape& shape) {
    validate_shape(shape);
    return std::visit([](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disk>) return kPi * s.radius * s.radius;
        else if constexpr (std::is_same_v<T, Rectangle>) return s.w * s.h;
        else return kPi * (s.r_out * s.r_out - s.r_in * s.r_in);
    }, shape);
}

// Tensor (rectangle) / polar (disk, annulus) midpoint quadrature nodes.
inline std::vector<std::pair<Vec2, double>> quad_points(const AnalyticShape& shape, int depth) {
    validate_shape(shape);
    if (depth < 1) throw Error("BadDepth", "quadrature depth must be >= 1");
    std::vector<std::pair<Vec2, double>> pts;
    std::visit([&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Rectangle>) {
            const double dx = s.w / depth, dy = s.h / depth;
            pts.reserve(static_cast<std::size_t>(depth) * depth);
            for (int j = 0; j < depth; ++j)
                for (int i = 0; i < depth; ++i)
                    pts.push_back({{s.corner.x + (i + 0.5) * dx, s.corner.y + (j + 0.5) * dy}, dx * dy});
        } else {
            double r0 = 0.0, r1 = 0.0;
            if constexpr (std::is_same_v<T, Disk>) { r1 = s.radius; }
            else { r0 = s.r_in; r1 = s.r_out; }
            const Vec2 c = s.center;
            const int ntheta = 2 * depth;
            const double dr = (r1 - r0) / depth;
            const double dth = 2.0 * kPi / ntheta;
            pts.reserve(static_cast<std::size_t>(depth) * ntheta);
            for (int k = 0; k < depth; ++k) {
                const double r = r0 + (k + 0.5) * dr;
                for (int q = 0; q < ntheta; ++q) {
                    const double th = (q + 0.5) * dth;
                    pts.push_back({{c.x + r * std::cos(th), c.y + r * std::sin(th)}, r * dr * dth});
                }
            }
        }
    }, shape);
    return pts;
}

inline double quad_over_shape(const AnalyticShape& shape, int depth,
                              const std::function<double(Vec2)>& fn) {
    KahanAccumulator acc;
    for (const auto& [x, w] : quad_points(shape, depth)) acc.add(fn(x) * w);
    return acc.value();
}

inline double weighted_volume(const std::function<double(Vec2)>& g, const AnalyticShape& shape,
                              int depth) {
    return quad_over_shape(shape, depth, g);
}

// Midpoint quadrature of fn(x, outward normal) ds over the shape boundary.
inline double boundary_integral(const AnalyticShape& shape, int npts,
                                const std::function<double(Vec2, Vec2)>& fn) {
    validate_shape(shape);
    KahanAccumulator acc;
    auto circle = [&](Vec2 c, double R, double orient) {
        const double dth = 2.0 * kPi / npts;
        for (int q = 0; q < npts; ++q) {
            const double th = (q + 0.5) * dth;
            const Vec2 e{std::cos(th), std::sin(th)};
            acc.add(fn(c + e * R, e * orient) * R * dth);
        }
    };
    std::visit([&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disk>) {
            circle(s.center, s.radius, 1.0);
        } else if constexpr (std::is_same_v<T, Annulus>) {
            circle(s.center, s.r_out, 1.0);
            circle(s.center, s.r_in, -1.0); // inner boundary: outward normal points inward
        } else {
            const Vec2 corners[4] = {
                s.corner, {s.corner.x + s.w, s.corner.y},
                {s.corner.x + s.w, s.corner.y + s.h}, {s.corner.x, s.corner.y + s.h}};
            const Vec2 normals[4] = {{0, -1}, {1, 0}, {0, 1}, {-1, 0}};
            for (int e = 0; e < 4; ++e) {
                const Vec2 a = corners[e], b = corners[(e + 1) % 4];
                const Vec2 d = b - a;
                const double len = d.norm();
                for (int q = 0; q < npts; ++q)
                    acc.add(fn(a + d * ((q + 0.5) / npts), normals[e]) * len / npts);
            }
        }
    }, shape);
    return acc.value();
}

// ---------------------------------------------------------------------------
// Polygonal boundary tracking (volume objective): vertices advected by a
// point map, area by the shoelace/Green formula.
// ---------------------------------------------------------------------------

struct Polygon {
    // first loop CCW (positive), any further loops CW (holes)
    std::vector<std::vector<Vec2>> loops;
};

inline Polygon polygon_of(const AnalyticShape& shape, int nv = 4096) {
    validate_shape(shape);
    Polygon poly;
    auto circle_loop = [&](Vec2 c, double R, bool ccw) {
        std::vector<Vec2> loop(static_cast<std::size_t>(nv));
        for (int k = 0; k < nv; ++k) {
            const double th = 2.0 * kPi * k / nv * (ccw ? 1.0 : -1.0);
            loop[static_cast<std::size_t>(k)] = {c.x + R * std::cos(th), c.y + R * std::sin(th)};
        }
        return loop;
    };
    std::visit([&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disk>) {
            poly.loops.push_back(circle_loop(s.center, s.radius, true));
        } else if constexpr (std::is_same_v<T, Annulus>) {
            poly.loops.push_back(circle_loop(s.center, s.r_out, true));
            poly.loops.push_back(circle_loop(s.center, s.r_in, false));
        } else {
            std::vector<Vec2> loop;
            const Vec2 corners[4] = {
                s.corner, {s.corner.x + s.w, s.corner.y},
                {s.corner.x + s.w, s.corner.y + s.h}, {s.corner.x, s.corner.y + s.h}};
            const int per_edge = std::max(1, nv / 4);
            for (int e = 0; e < 4; ++e) {
                const Vec2 a = corners[e], b = corners[(e + 1) % 4];
                for (int q = 0; q < per_edge; ++q)
                    loop.push_back(a + (b - a) * (static_cast<double>(q) / per_edge));
            }
            poly.loops.push_back(std::move(loop));
        }
    }, shape);
    return poly;
}

inline double loop_area(const std::vector<Vec2>& loop) {
    KahanAccumulator acc;
    const std::size_t n = loop.size();
    for (std::size_t k = 0; k < n; ++k) {
        const Vec2 a = loop[k], b = loop[(k + 1) % n];
        acc.add(a.x * b.y - b.x * a.y);
    }
    return 0.5 * acc.value();
}

inline double polygon_area(const Polygon& poly) {
    double total = 0.0;
    for (std::size_t l = 0; l < poly.loops.size(); ++l) {
        const double a = loop_area(poly.loops[l]);
        if (l == 0 && a <= 0.0)
            throw Error("DegenerateBoundary", "advected outer loop reversed orientation");
        if (l > 0 && a >= 0.0)
            throw Error("DegenerateBoundary", "advected hole loop reversed orientation");
        total += a;
    }
    return total;
}

inline Polygon advect_polygon(const Polygon& poly, const std::function<Vec2(Vec2)>& map) {
    Polygon out = poly;
    for (auto& loop : out.loops)
        for (Vec2& v : loop) v = map(v);
    return out;
}

// ---------------------------------------------------------------------------
// Richardson-extrapolated central differences.
// ---------------------------------------------------------------------------

struct DerivativeReport {
    std::string test;
    double estimate = 0.0;
    double reference = 0.0;
    double abs_err = 0.0;
    double rel_err = 0.0;
    std::vector<double> richardson_orders;
    double fit_exponent = std::numeric_limits<double>::quiet_NaN();
    bool pass = false;
};

constexpr double kRelErrFloor = 1e-12;

inline void finalize_report(DerivativeReport& r, double tol) {
    r.abs_err = std::abs(r.estimate - r.reference);
    r.rel_err = r.abs_err / std::max(std::abs(r.reference), kRelErrFloor);
    r.pass = r.rel_err <= tol;
}

// ts must be strictly decreasing (typically t0 / 2^k). Returns the deepest
// Neville extrapolant of the central differences and the observed orders.
inline std::pair<double, std::vector<double>>
richardson_central(const std::function<double(double)>& J, const std::vector<double>& ts) {
    if (ts.empty()) throw Error("BadSteps", "empty t grid");
    const std::size_t n = ts.size();
    std::vector<double> D(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (!(ts[k] > 0.0) || (k > 0 && ts[k] >= ts[k - 1]))
            throw Error("BadSteps", "t grid must be positive and decreasing");
        D[k] = (J(ts[k]) - J(-ts[k])) / (2.0 * ts[k]);
    }
    std::vector<double> orders;
    for (std::size_t k = 0; k + 2 < n; ++k) {
        const double d0 = std::abs(D[k] - D[k + 1]);
        const double d1 = std::abs(D[k + 1] - D[k + 2]);
        if (d0 > 1e-30 && d1 > 1e-30)
            orders.push_back(std::log(d0 / d1) / std::log(ts[k] / ts[k + 1]));
    }
    std::vector<double> row = D;
    double factor = 1.0;
    const double ratio2 = n >= 2 ? (ts[0] / ts[1]) * (ts[0] / ts[1]) : 4.0;
    for (std::size_t lvl = 1; lvl < n; ++lvl) {
        factor *= ratio2;
        for (std::size_t k = 0; k + lvl < n; ++k)
            row[k] = (factor * row[k + 1] - row[k]) / (factor - 1.0);
    }
    return {row[0], orders};
}

// ---------------------------------------------------------------------------
// Objectives on shapes.
// ---------------------------------------------------------------------------

struct VolumeObjective {};
struct WeightedVolumeObjective {
    std::function<double(Vec2)> g;
};
using ShapeObjective = std::variant<VolumeObjective, WeightedVolumeObjective>;

namespace detail {

inline double shape_reference(const AnalyticShape& shape, const ShapeObjective& objective,
                              const VectorFieldSpec& field, int depth, int boundary_pts) {
    if (std::holds_alternative<VolumeObjective>(objective))
        return quad_over_shape(shape, depth, [&](Vec2 x) { return field_divergence(field, x); });
    const auto& g = std::get<WeightedVolumeObjective>(objective).g;
    return boundary_integral(shape, boundary_pts,
                             [&](Vec2 x, Vec2 n) { return g(x) * evaluate_field(field, x).dot(n); });
}

// Richardson table over precomputed J(+t_k), J(-t_k); ts strictly decreasing.
inline std::pair<double, std::vector<double>>
richardson_from_values(const std::vector<double>& ts, const std::vector<double>& j_plus,
                       const std::vector<double>& j_minus) {
    const std::size_t n = ts.size();
    std::vector<double> D(n);
    for (std::size_t k = 0; k < n; ++k)
        D[k] = (j_plus[k] - j_minus[k]) / (2.0 * ts[k]);
    std::vector<double> orders;
    for (std::size_t k = 0; k + 2 < n; ++k) {
        const double d0 = std::abs(D[k] - D[k + 1]);
        const double d1 = std::abs(D[k + 1] - D[k + 2]);
        if (d0 > 1e-30 && d1 > 1e-30)
            orders.push_back(std::log(d0 / d1) / std::log(ts[k] / ts[k + 1]));
    }
    std::vector<double> row = D;
    double factor = 1.0;
    const double ratio2 = n >= 2 ? (ts[0] / ts[1]) * (ts[0] / ts[1]) : 4.0;
    for (std::size_t lvl = 1; lvl < n; ++lvl) {
        factor *= ratio2;
        for (std::size_t k = 0; k + lvl < n; ++k)
            row[k] = (factor * row[k + 1] - row[k]) / (factor - 1.0);
    }
    return {row[0], orders};
}

} // namespace detail

struct VerifyOptions {
    std::vector<double> ts{0.08, 0.04, 0.02, 0.01};
    double tol = 1e-3;
    int depth = 128;          // area quadrature depth for weighted objectives
    int boundary_pts = 8192;  // boundary oracle resolution
    int polygon_vertices = 4096;
    int flow_steps = 48;      // total RK4 steps across the largest |t|
};

// Prop-style check: d/dt J((Id + t theta)(Omega)) at 0 against the analytic
// shape derivative. Field data is evaluated once per node; the t sweep only
// touches cached values.
inline DerivativeReport verify_shape1(const AnalyticShape& shape, const VectorFieldSpec& field,
                                      const ShapeObjective& objective,
                                      const VerifyOptions& opt = {}) {
    DerivativeReport rep;
    rep.test = "shape1";
    const std::size_t nt = opt.ts.size();
    std::vector<double> j_plus(nt), j_minus(nt);

    if (std::holds_alternative<VolumeObjective>(objective)) {
        const Polygon base = polygon_of(shape, opt.polygon_vertices);
        std::vector<std::vector<Vec2>> theta(base.loops.size());
        for (std::size_t l = 0; l < base.loops.size(); ++l) {
            theta[l].reserve(base.loops[l].size());
            for (Vec2 v : base.loops[l]) theta[l].push_back(evaluate_field(field, v));
        }
        auto area_at = [&](double t) {
            Polygon moved = base;
            for (std::size_t l = 0; l < moved.loops.size(); ++l)
                for (std::size_t k = 0; k < moved.loops[l].size(); ++k)
                    moved.loops[l][k] += theta[l][k] * t;
            return polygon_area(moved);
        };
        for (std::size_t k = 0; k < nt; ++k) {
            j_plus[k] = area_at(opt.ts[k]);
            j_minus[k] = area_at(-opt.ts[k]);
        }
    } else {
        const auto& g = std::get<WeightedVolumeObjective>(objective).g;
        const auto pts = quad_points(shape, opt.depth);
        std::vector<Vec2> theta(pts.size());
        std::vector<Mat2> jac(pts.size());
        for (std::size_t q = 0; q < pts.size(); ++q) {
            theta[q] = evaluate_field(field, pts[q].first);
            jac[q] = field_jacobian(field, pts[q].first);
        }
        auto value_at = [&](double t) {
            KahanAccumulator acc;
            for (std::size_t q = 0; q < pts.size(); ++q) {
                const Mat2 A = Mat2::identity() + jac[q] * t;
                acc.add(g(pts[q].first + theta[q] * t) * A.det() * pts[q].second);
            }
            return acc.value();
        };
        for (std::size_t k = 0; k < nt; ++k) {
            j_plus[k] = value_at(opt.ts[k]);
            j_minus[k] = value_at(-opt.ts[k]);
        }
    }

    auto [est, orders] = detail::richardson_from_values(opt.ts, j_plus, j_minus);
    rep.estimate = est;
    rep.richardson_orders = std::move(orders);
    rep.reference = detail::shape_reference(shape, objective, field, 2 * opt.depth, opt.boundary_pts);
    finalize_report(rep, opt.tol);
    return rep;
}

// Same derivative along the true flow of grad(phi): curve-based and
// perturbation-based derivatives must coincide. Trajectories are integrated
// once per node per sign, sampled at every t level.
inline DerivativeReport verify_shape2(const AnalyticShape& shape, const Potential& phi,
                                      const ShapeObjective& objective,
                                      const VerifyOptions& opt = {}) {
    const VectorFieldSpec field = VectorFieldSpec::gradient(phi);
    DerivativeReport rep;
    rep.test = "shape2";
    const std::size_t nt = opt.ts.size();
    std::vector<double> ts_asc(opt.ts.rbegin(), opt.ts.rend());
    std::vector<double> j_plus(nt), j_minus(nt);

    if (std::holds_alternative<VolumeObjective>(objective)) {
        const Polygon base = polygon_of(shape, opt.polygon_vertices);
        for (double sign : {1.0, -1.0}) {
            // positions[k] holds the advected polygon at ts_asc[k]
            std::vector<Polygon> positions(nt, base);
            for (std::size_t l = 0; l < base.loops.size(); ++l)
                for (std::size_t v = 0; v < base.loops[l].size(); ++v) {
                    const auto samples = flow_samples(field, base.loops[l][v], ts_asc, sign, opt.flow_steps);
                    for (std::size_t k = 0; k < nt; ++k)
                        positions[k].loops[l][v] = samples[k].first;
                }
            for (std::size_t k = 0; k < nt; ++k) {
                const double area = polygon_area(positions[k]);
                // ts_asc is reversed relative to opt.ts
                const std::size_t out = nt - 1 - k;
                (sign > 0 ? j_plus : j_minus)[out] = area;
            }
        }
    } else {
        const auto& g = std::get<WeightedVolumeObjective>(objective).g;
        const auto pts = quad_points(shape, opt.depth);
        for (double sign : {1.0, -1.0}) {
            std::vector<KahanAccumulator> acc(nt);
            for (const auto& [x, w] : pts) {
                const auto samples = flow_samples(field, x, ts_asc, sign, opt.flow_steps);
                for (std::size_t k = 0; k < nt; ++k)
                    acc[k].add(g(samples[k].first) * samples[k].second * w);
            }
            for (std::size_t k = 0; k < nt; ++k)
                (sign > 0 ? j_plus : j_minus)[nt - 1 - k] = acc[k].value();
        }
    }

    auto [est, orders] = detail::richardson_from_values(opt.ts, j_plus, j_minus);
    rep.estimate = est;
    rep.richardson_orders = std::move(orders);
    rep.reference = detail::shape_reference(shape, objective, field, 2 * opt.depth, opt.boundary_pts);
    finalize_report(rep, opt.tol);
    return rep;
}

// Topological derivative: the hole field removes B_{r(t)}(x0) from Omega;
// fit J(mu_t) - J(mu) against alpha_2 t^2 (alpha_2 = pi). Restricted to the
// rotationally symmetric configuration (disk centered at the hole).
inline DerivativeReport verify_top(const Disk& disk, Vec2 x0, double eps,
                                   const std::vector<double>& ts,
                                   const ShapeObjective& objective,
                                   double tol = 1e-3, int depth = 512) {
    if ((disk.center - x0).norm() > 1e-12 * disk.radius)
        throw Error("BallNotInterior", "verify_top requires the disk centered at x0");
    if (!(2.0 * eps < disk.radius))
        throw Error("BallNotInterior", "closure of B_2eps(x0) must lie inside Omega");
    for (double t : ts)
        if (!(t > 0.0) || !(t < eps))
            throw Error("BadSteps", "t grid must satisfy 0 < t < eps");

    const VectorFieldSpec field = VectorFieldSpec::hole(x0, eps);
    const AnalyticShape shape = disk;

    auto objective_minus_ball = [&](double hole_r) -> double {
        if (std::holds_alternative<VolumeObjective>(objective))
            return kPi * (disk.radius * disk.radius - hole_r * hole_r);
        const auto& g = std::get<WeightedVolumeObjective>(objective).g;
        const double total = quad_over_shape(shape, depth, g);
        if (hole_r <= 0.0) return total;
        const double removed = quad_over_shape(AnalyticShape(Disk{x0, hole_r}), depth, g);
        return total - removed;
    };

    // hole radius from the scalar radial flow, extrapolated r0 -> 0+
    auto hole_radius = [&](double t) {
        const double r0a = 1e-3 * eps, r0b = 1e-4 * eps;
        const double ra = radial_flow(field, r0a, t);
        const double rb = radial_flow(field, r0b, t);
        return rb - r0b * (ra - rb) / (r0a - r0b);
    };

    const double J0 = objective_minus_ball(0.0);
    std::vector<double> ys(ts.size());
    for (std::size_t k = 0; k < ts.size(); ++k)
        ys[k] = objective_minus_ball(hole_radius(ts[k])) - J0;

    double st2y = 0.0, st4 = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        st2y += ts[k] * ts[k] * ys[k];
        st4 += ts[k] * ts[k] * ts[k] * ts[k];
    }
    DerivativeReport rep;
    rep.test = "top";
    rep.estimate = st2y / st4 / kPi; // alpha_2 = pi in d = 2

    // free-exponent refit of |y| = c t^q
    double sl = 0.0, sll = 0.0, sy = 0.0, sly = 0.0;
    int nfit = 0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        if (std::abs(ys[k]) < 1e-300) continue;
        const double lx = std::log(ts[k]), ly = std::log(std::abs(ys[k]));
        sl += lx; sll += lx * lx; sy += ly; sly += lx * ly;
        ++nfit;
    }
    if (nfit >= 2) rep.fit_exponent = (nfit * sly - sl * sy) / (nfit * sll - sl * sl);

    if (std::holds_alternative<VolumeObjective>(objective))
        rep.reference = -1.0;
    else
        rep.reference = -std::get<WeightedVolumeObjective>(objective).g(x0);
    finalize_report(rep, tol);
    return rep;
}

// ---------------------------------------------------------------------------
// Density-method directional derivative (Prop-WassDens style): finite
// differences of J(rho_t) along the flow of grad(phi) against
// <grad F, grad phi>_{L^2(rho)}.
// ---------------------------------------------------------------------------

struct LinearDensityObjective {
    std::function<double(Vec2)> F;
    std::function<Vec2(Vec2)> gradF;
};

struct ComplianceDensityObjective {
    MaterialLaw law;
    BoundaryCondition bc;
    double m_total = 1.0;
};

using DensityObjective = std::variant<LinearDensityObjective, ComplianceDensityObjective>;

struct DensVerifyOptions {
    std::vector<double> ts{0.02, 0.01, 0.005, 0.0025};
    double tol = 1e-6;
    int flow_steps = 32;
};

inline DerivativeReport verify_dens(const DensityObjective& objective, const GridSpec& grid,
                                    const AnalyticDensity& rho_in, const Potential& phi,
                                    const DensVerifyOptions& opt = {}) {
    const VectorFieldSpec field = VectorFieldSpec::gradient(phi);
    const double cell = grid.cell_area();

    // Normalize by the discrete box mass so the curve t -> rho_t keeps unit
    // mass to machine precision and the pushforward's drift guard stays
    // inert; a t-dependent renormalization would contaminate the estimate.
    GridDensity rho0(grid);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i)
            rho0.at(i, j) = rho_in.value(grid.center(i, j));
    const double m0 = total_mass(rho0);
    for (double& v : rho0.values) v /= m0;
    AnalyticDensity rho;
    rho.value = [inner = rho_in.value, m0](Vec2 x) { return inner(x) / m0; };
    if (rho_in.grad)
        rho.grad = [inner = rho_in.grad, m0](Vec2 x) { return inner(x) / m0; };

    auto objective_of = [&](const GridDensity& d) -> double {
        if (const auto* lin = std::get_if<LinearDensityObjective>(&objective)) {
            KahanAccumulator acc;
            for (int j = 0; j < grid.ny; ++j)
                for (int i = 0; i < grid.nx; ++i)
                    acc.add(lin->F(grid.center(i, j)) * d.at(i, j));
            return acc.value() * cell;
        }
        const auto& comp = std::get<ComplianceDensityObjective>(objective);
        const ElasticSystem sys = assemble(d, comp.law, comp.bc, comp.m_total);
        return compliance(sys, solve_state(sys));
    };

    auto J = [&](double t) {
        if (t == 0.0) return objective_of(rho0);
        return objective_of(pushforward_density_analytic(rho, grid, field, t, opt.flow_steps).rho);
    };

    DerivativeReport rep;
    rep.test = "dens";
    auto [est, orders] = richardson_central(J, opt.ts);
    rep.estimate = est;
    rep.richardson_orders = std::move(orders);

    if (const auto* lin = std::get_if<LinearDensityObjective>(&objective)) {
        KahanAccumulator acc;
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i) {
                const Vec2 x = grid.center(i, j);
                acc.add(lin->gradF(x).dot(phi.grad(x)) * rho.value(x));
            }
        rep.reference = acc.value() * cell;
    } else {
        const auto& comp = std::get<ComplianceDensityObjective>(objective);
        const ElasticSystem sys = assemble(rho0, comp.law, comp.bc, comp.m_total);
        const ElasticField state = solve_state(sys);
        const std::vector<double> F = sensitivity_F(rho0, state, comp.law, comp.m_total);
        KahanAccumulator acc;
        if (rho.grad) {
            // <grad F, grad phi>_{L^2(rho)} with the parts taken analytically:
            // -int F div(rho grad phi). F is the only discrete factor, so no
            // difference stencil touches its mesh noise.
            for (int j = 0; j < grid.ny; ++j)
                for (int i = 0; i < grid.nx; ++i) {
                    const Vec2 x = grid.center(i, j);
                    const double div_rho_gphi =
                        rho.grad(x).dot(phi.grad(x)) + rho.value(x) * phi.hess(x).trace();
                    acc.add(-F[static_cast<std::size_t>(grid.idx(i, j))] * div_rho_gphi);
                }
        } else {
            const GridVectorField gradF = wasserstein_gradient(F, grid);
            for (int j = 0; j < grid.ny; ++j)
                for (int i = 0; i < grid.nx; ++i) {
                    const Vec2 x = grid.center(i, j);
                    const Vec2 gF{gradF.u(i, j), gradF.v(i, j)};
                    acc.add(gF.dot(phi.grad(x)) * rho0.at(i, j));
                }
        }
        rep.reference = kComplianceSensitivitySign * acc.value() * cell;
    }
    finalize_report(rep, opt.tol);
    return rep;
}

} // namespace wassflow
