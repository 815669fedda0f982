#pragma once

#include "wassflow/core.hpp"

#include <functional>
#include <memory>
#include <utility>
#include <variant>
#include <vector>

namespace wassflow {

// ---------------------------------------------------------------------------
// C^inf bump profile eta: [0,inf) -> [0,1],
//   eta(r) = 1                              for r <= eps,
//   eta(r) = exp(1 - 1/(1-s^2)), s=(r-eps)/eps   for eps < r < 2 eps,
//   eta(r) = 0                              for r >= 2 eps.
// Rotationally symmetric psi(x) = eta(|x-x0|) is the hole-field cutoff.
// ---------------------------------------------------------------------------
namespace bump {

inline double eta(double r, double eps) {
    if (r <= eps) return 1.0;
    const double s = (r - eps) / eps;
    if (s >= 1.0) return 0.0;
    const double w = 1.0 - s * s;
    return std::exp(1.0 - 1.0 / w);
}

inline double deta(double r, double eps) {
    if (r <= eps) return 0.0;
    const double s = (r - eps) / eps;
    if (s >= 1.0) return 0.0;
    const double w = 1.0 - s * s;
    const double e = std::exp(1.0 - 1.0 / w);
    const double du = -2.0 * s / (w * w); // d/ds of (1 - 1/w)
    return e * du / eps;
}

inline double d2eta(double r, double eps) {
    if (r <= eps) return 0.0;
    const double s = (r - eps) / eps;
    if (s >= 1.0) return 0.0;
    const double w = 1.0 - s * s;
    const double e = std::exp(1.0 - 1.0 / w);
    const double du = -2.0 * s / (w * w);
    const double d2u = -2.0 / (w * w) - 8.0 * s * s / (w * w * w);
    return e * (du * du + d2u) / (eps * eps);
}

} // namespace bump

// ---------------------------------------------------------------------------
// Smooth scalar potential supplied as closed-form value/gradient/Hessian.
// hessian_bound is a sup bound on the Hessian operator norm (the Gronwall
// constant in the Jacobian estimate).
// ---------------------------------------------------------------------------
struct Potential {
    std::function<double(Vec2)> value;
    std::function<Vec2(Vec2)> grad;
    std::function<Mat2(Vec2)> hess;
    double hessian_bound = 0.0;
};

// phi(x) = amp * exp(-|x-c|^2 / (2 s^2))
inline Potential gaussian_potential(Vec2 c, double s, double amp) {
    if (!(s > 0.0)) throw Error("BadPotential", "gaussian width must be > 0");
    const double inv_s2 = 1.0 / (s * s);
    Potential p;
    p.value = [=](Vec2 x) { return amp * std::exp(-0.5 * (x - c).norm2() * inv_s2); };
    p.grad = [=](Vec2 x) {
        const Vec2 d = x - c;
        return d * (-amp * std::exp(-0.5 * d.norm2() * inv_s2) * inv_s2);
    };
    p.hess = [=](Vec2 x) {
        const Vec2 d = x - c;
        const double v = amp * std::exp(-0.5 * d.norm2() * inv_s2);
        return (Mat2::outer(d, d) * inv_s2 - Mat2::identity()) * (v * inv_s2);
    };
    p.hessian_bound = std::abs(amp) * inv_s2;
    return p;
}

inline Potential sum_potentials(std::vector<Potential> parts) {
    Potential p;
    double bound = 0.0;
    for (const Potential& q : parts) bound += q.hessian_bound;
    auto shared = std::make_shared<std::vector<Potential>>(std::move(parts));
    p.value = [shared](Vec2 x) {
        double v = 0.0;
        for (const Potential& q : *shared) v += q.value(x);
        return v;
    };
    p.grad = [shared](Vec2 x) {
        Vec2 g;
        for (const Potential& q : *shared) g += q.grad(x);
        return g;
    };
    p.hess = [shared](Vec2 x) {
        Mat2 h;
        for (const Potential& q : *shared) h += q.hess(x);
        return h;
    };
    p.hessian_bound = bound;
    return p;
}

// ---------------------------------------------------------------------------
// Velocity field variants. HoleField is the singular field of the
// topological-derivative construction: theta = grad(psi * |x-x0|) on
// R^2 \ {x0}, which works out to
//   theta(x) = eta'(r) (x-x0) + eta(r) (x-x0)/r,   r = |x-x0|.
// ---------------------------------------------------------------------------

struct ConstantField { Vec2 v; };
struct LinearField { Mat2 A; };
struct RotationField {}; // theta(x,y) = (-y, x)
struct GradientField { Potential phi; };
struct HoleField {
    Vec2 x0;
    double eps = 0.0;
};

class VectorFieldSpec {
public:
    using Variant = std::variant<ConstantField, LinearField, RotationField, GradientField, HoleField>;

    explicit VectorFieldSpec(Variant v) : field_(std::move(v)) {
        if (const auto* h = std::get_if<HoleField>(&field_))
            if (!(h->eps > 0.0)) throw Error("BadField", "hole field eps must be > 0");
        if (const auto* g = std::get_if<GradientField>(&field_))
            spot_check(g->phi);
    }

    static VectorFieldSpec constant(Vec2 v) { return VectorFieldSpec(ConstantField{v}); }
    static VectorFieldSpec linear(Mat2 A) { return VectorFieldSpec(LinearField{A}); }
    static VectorFieldSpec rotation() { return VectorFieldSpec(RotationField{}); }
    static VectorFieldSpec gradient(Potential p) { return VectorFieldSpec(GradientField{std::move(p)}); }
    static VectorFieldSpec hole(Vec2 x0, double eps) { return VectorFieldSpec(HoleField{x0, eps}); }

    const Variant& variant() const { return field_; }
    bool is_hole() const { return std::holds_alternative<HoleField>(field_); }
    const HoleField& hole_data() const {
        if (const auto* h = std::get_if<HoleField>(&field_)) return *h;
        throw Error("BadField", "not a hole field");
    }
    bool is_gradient() const { return std::holds_alternative<GradientField>(field_); }
    const Potential& potential() const {
        if (const auto* g = std::get_if<GradientField>(&field_)) return g->phi;
        throw Error("BadField", "not a gradient field");
    }

private:
    // Supplied gradient/Hessian closures must be consistent with the value;
    // checked by central differences at a few probes.
    static void spot_check(const Potential& p) {
        const double fd_h = 1e-5;
        const Vec2 probes[4] = {{0.13, -0.07}, {0.42, 0.35}, {0.5, 0.5}, {-0.21, 0.64}};
        double scale = p.hessian_bound + 1.0;
        for (Vec2 x : probes) {
            const Vec2 g = p.grad(x);
            const double gx = (p.value({x.x + fd_h, x.y}) - p.value({x.x - fd_h, x.y})) / (2 * fd_h);
            const double gy = (p.value({x.x, x.y + fd_h}) - p.value({x.x, x.y - fd_h})) / (2 * fd_h);
            if (std::abs(g.x - gx) + std::abs(g.y - gy) > 1e-5 * scale)
                throw Error("InconsistentPotential", "gradient closure disagrees with value closure");
            const Mat2 H = p.hess(x);
            const Vec2 hx = (p.grad({x.x + fd_h, x.y}) - p.grad({x.x - fd_h, x.y})) / (2 * fd_h);
            const Vec2 hy = (p.grad({x.x, x.y + fd_h}) - p.grad({x.x, x.y - fd_h})) / (2 * fd_h);
            if (std::abs(H.a - hx.x) + std::abs(H.c - hx.y) + std::abs(H.b - hy.x) + std::abs(H.d - hy.y)
                > 1e-4 * scale)
                throw Error("InconsistentPotential", "Hessian closure disagrees with gradient closure");
        }
    }

    Variant field_;
};

inline Vec2 evaluate_field(const VectorFieldSpec& spec, Vec2 x) {
    return std::visit([&](const auto& f) -> Vec2 {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ConstantField>) {
            return f.v;
        } else if constexpr (std::is_same_v<T, LinearField>) {
            return f.A * x;
        } else if constexpr (std::is_same_v<T, RotationField>) {
            return {-x.y, x.x};
        } else if constexpr (std::is_same_v<T, GradientField>) {
            return f.phi.grad(x);
        } else {
            const Vec2 d = x - f.x0;
            const double r = d.norm();
            if (r == 0.0) throw Error("SingularPoint", "hole field evaluated at its center");
            return d * (bump::deta(r, f.eps) + bump::eta(r, f.eps) / r);
        }
    }, spec.variant());
}

inline Mat2 field_jacobian(const VectorFieldSpec& spec, Vec2 x) {
    return std::visit([&](const auto& f) -> Mat2 {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ConstantField>) {
            return Mat2::zero();
        } else if constexpr (std::is_same_v<T, LinearField>) {
            return f.A;
        } else if constexpr (std::is_same_v<T, RotationField>) {
            return {0.0, -1.0, 1.0, 0.0};
        } else if constexpr (std::is_same_v<T, GradientField>) {
            return f.phi.hess(x);
        } else {
            // theta = g(r) e with g = eta' r + eta and e the unit radial vector:
            // grad theta = g'(r) e e^T + (g(r)/r) (I - e e^T).
            const Vec2 d = x - f.x0;
            const double r = d.norm();
            if (r == 0.0) throw Error("SingularPoint", "hole field evaluated at its center");
            const Vec2 e = d / r;
            const double g = bump::deta(r, f.eps) * r + bump::eta(r, f.eps);
            const double gp = bump::d2eta(r, f.eps) * r + 2.0 * bump::deta(r, f.eps);
            const Mat2 P = Mat2::outer(e, e);
            return P * gp + (Mat2::identity() - P) * (g / r);
        }
    }, spec.variant());
}

inline double field_divergence(const VectorFieldSpec& spec, Vec2 x) {
    return field_jacobian(spec, x).trace();
}

// The Gronwall constant: |grad Phi_t| <= exp(t * H) needs H >= sup |hess phi|.
inline double hessian_bound(const VectorFieldSpec& spec) {
    return std::visit([](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, GradientField>) return f.phi.hessian_bound;
        else if constexpr (std::is_same_v<T, LinearField>) return f.A.opnorm();
        else if constexpr (std::is_same_v<T, RotationField>) return 1.0;
        else return 0.0;
    }, spec.variant());
}

// ---------------------------------------------------------------------------
// Analytic densities (Gaussian mixtures) for verification runs where grid
// interpolation error must stay out of the derivative estimates. grad is
// optional; when present it enables exact integration by parts in the
// verification quadratures.
// ---------------------------------------------------------------------------
struct AnalyticDensity {
    std::function<double(Vec2)> value;
    std::function<Vec2(Vec2)> grad;
};

struct GaussianBlob {
    Vec2 center;
    double sigma = 0.1;
    double weight = 1.0;
};

inline AnalyticDensity gaussian_mixture(std::vector<GaussianBlob> blobs) {
    double wsum = 0.0;
    for (const GaussianBlob& b : blobs) wsum += b.weight;
    if (!(wsum > 0.0)) throw Error("BadDensity", "mixture weights must have positive sum");
    for (GaussianBlob& b : blobs) b.weight /= wsum;
    auto shared = std::make_shared<std::vector<GaussianBlob>>(std::move(blobs));
    AnalyticDensity d;
    d.value = [shared](Vec2 x) {
        double v = 0.0;
        for (const GaussianBlob& b : *shared) {
            const double q = (x - b.center).norm2() / (2.0 * b.sigma * b.sigma);
            v += b.weight / (2.0 * kPi * b.sigma * b.sigma) * std::exp(-q);
        }
        return v;
    };
    d.grad = [shared](Vec2 x) {
        Vec2 g;
        for (const GaussianBlob& b : *shared) {
            const double s2 = b.sigma * b.sigma;
            const double v = b.weight / (2.0 * kPi * s2) * std::exp(-(x - b.center).norm2() / (2.0 * s2));
            g += (b.center - x) * (v / s2);
        }
        return g;
    };
    return d;
}

} // namespace wassflow
