#pragma once

#include "wassflow/core.hpp"

#include <functional>
#include <vector>

namespace wassflow {

// Weighted point cloud: the discrete home of mu in P_2(R^2). Weights are
// positive and sum to 1.
struct ParticleMeasure {
    std::vector<Vec2> points;
    std::vector<double> weights;

    ParticleMeasure() = default;
    ParticleMeasure(std::vector<Vec2> pts, std::vector<double> ws)
        : points(std::move(pts)), weights(std::move(ws)) {
        validate();
    }

    static ParticleMeasure dirac(Vec2 p) { return ParticleMeasure({p}, {1.0}); }

    static ParticleMeasure equal_weights(std::vector<Vec2> pts) {
        const std::size_t n = pts.size();
        return ParticleMeasure(std::move(pts), std::vector<double>(n, 1.0 / static_cast<double>(n)));
    }

    std::size_t size() const { return points.size(); }

    void validate() const {
        if (points.size() != weights.size() || points.empty())
            throw Error("BadMeasure", "points/weights size mismatch or empty");
        for (const Vec2& p : points)
            if (!p.finite()) throw Error("BadMeasure", "non-finite support point");
        for (double w : weights)
            if (!(w > 0.0)) throw Error("BadMeasure", "weights must be positive");
        if (std::abs(neumaier_sum(weights) - 1.0) > 1e-12)
            throw Error("BadMeasure", "weights must sum to 1");
    }
};

// Phi_#mu: points mapped, weights untouched.
inline ParticleMeasure pushforward_particles(const ParticleMeasure& m,
                                             const std::function<Vec2(Vec2)>& map) {
    ParticleMeasure out = m;
    for (std::size_t k = 0; k < m.points.size(); ++k) {
        Vec2 q;
        try {
            q = map(m.points[k]);
        } catch (const std::exception& e) {
            throw Error("MapUndefined", std::string("map failed at support point: ") + e.what());
        }
        if (!q.finite()) throw Error("MapUndefined", "map produced non-finite point");
        out.points[k] = q;
    }
    return out;
}

inline double second_moment(const ParticleMeasure& m) {
    KahanAccumulator acc;
    for (std::size_t k = 0; k < m.points.size(); ++k)
        acc.add(m.weights[k] * m.points[k].norm2());
    return acc.value();
}

inline Vec2 mean(const ParticleMeasure& m) {
    KahanAccumulator ax, ay;
    for (std::size_t k = 0; k < m.points.size(); ++k) {
        ax.add(m.weights[k] * m.points[k].x);
        ay.add(m.weights[k] * m.points[k].y);
    }
    return {ax.value(), ay.value()};
}

} // namespace wassflow
