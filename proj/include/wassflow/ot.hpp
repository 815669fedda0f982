#pragma once

#include "wassflow/core.hpp"
#include "wassflow/measures.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <vector>

namespace wassflow {

// Sparse coupling: entries (i, j, mass) with row sums = mu weights and
// column sums = nu weights.
struct Coupling {
    std::vector<int> rows;
    std::vector<int> cols;
    std::vector<double> mass;

    std::size_t size() const { return mass.size(); }

    std::vector<double> row_marginal(std::size_t m) const {
        std::vector<double> sums(m, 0.0);
        for (std::size_t k = 0; k < mass.size(); ++k) sums[static_cast<std::size_t>(rows[k])] += mass[k];
        return sums;
    }
    std::vector<double> col_marginal(std::size_t n) const {
        std::vector<double> sums(n, 0.0);
        for (std::size_t k = 0; k < mass.size(); ++k) sums[static_cast<std::size_t>(cols[k])] += mass[k];
        return sums;
    }
};

struct W2Result {
    double value = 0.0; // paper convention: sqrt of min sum pi_ij |x_i-y_j|^2/2
    Coupling plan;
};

// The paper defines W2 with the half-squared cost; the standard convention
// differs by sqrt(2). Both are exposed to avoid silent factor errors.
inline double w2_std_from_paper(double w2_paper) { return w2_paper * std::sqrt(2.0); }

inline void write_csv(const Coupling& plan, std::ostream& os) {
    os << "i,j,mass\n";
    char buf[96];
    for (std::size_t k = 0; k < plan.mass.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%d,%d,%.11e\n", plan.rows[k], plan.cols[k], plan.mass[k]);
        os << buf;
    }
}

namespace detail {

struct BasicCell {
    int i, j;
    double mass;
};

// Northwest-corner initial basic feasible solution: exactly m+n-1 basics
// (zero-mass entries on degenerate ties), forming a spanning staircase.
inline std::vector<BasicCell> northwest_corner(const std::vector<double>& a,
                                               const std::vector<double>& b) {
    const int m = static_cast<int>(a.size());
    const int n = static_cast<int>(b.size());
    std::vector<BasicCell> basis;
    basis.reserve(static_cast<std::size_t>(m + n - 1));
    int i = 0, j = 0;
    double a_rem = a[0], b_rem = b[0];
    for (;;) {
        const double t = std::min(a_rem, b_rem);
        basis.push_back({i, j, t});
        if (i == m - 1 && j == n - 1) break;
        if (a_rem <= b_rem && i < m - 1) {
            b_rem -= a_rem;
            ++i;
            a_rem = a[static_cast<std::size_t>(i)];
        } else if (j < n - 1) {
            a_rem -= b_rem;
            ++j;
            b_rem = b[static_cast<std::size_t>(j)];
        } else {
            b_rem -= a_rem;
            ++i;
            a_rem = a[static_cast<std::size_t>(i)];
        }
    }
    return basis;
}

} // namespace detail

// Exact Kantorovich solution at desk scale: transportation simplex with
// Bland's (lowest-index) pivoting, which also rules out degenerate cycling.
inline W2Result w2_exact(const ParticleMeasure& mu, const ParticleMeasure& nu) {
    const int m = static_cast<int>(mu.size());
    const int n = static_cast<int>(nu.size());
    if (m > 512 || n > 512) throw Error("SizeExceeded", "support sizes capped at 512");

    std::vector<double> cost(static_cast<std::size_t>(m) * n);
    double cscale = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            const double c = 0.5 * (mu.points[static_cast<std::size_t>(i)]
                                    - nu.points[static_cast<std::size_t>(j)]).norm2();
            cost[static_cast<std::size_t>(i) * n + j] = c;
            cscale = std::max(cscale, c);
        }
    const double tol = 1e-12 * (cscale + 1.0);

    std::vector<detail::BasicCell> basis = detail::northwest_corner(mu.weights, nu.weights);

    // node ids: rows 0..m-1, cols m..m+n-1
    const int nodes = m + n;
    std::vector<double> u(static_cast<std::size_t>(m)), v(static_cast<std::size_t>(n));
    std::vector<int> parent_node(static_cast<std::size_t>(nodes));
    std::vector<int> parent_arc(static_cast<std::size_t>(nodes));
    std::vector<std::vector<std::pair<int, int>>> adj(static_cast<std::size_t>(nodes));

    const long max_pivots = 2000L * nodes * nodes + 10000L;
    long pivots = 0;
    long degenerate_run = 0;

    for (;;) {
        // adjacency of the basis tree
        for (auto& lst : adj) lst.clear();
        for (int k = 0; k < static_cast<int>(basis.size()); ++k) {
            const auto& bc = basis[static_cast<std::size_t>(k)];
            adj[static_cast<std::size_t>(bc.i)].push_back({k, m + bc.j});
            adj[static_cast<std::size_t>(m + bc.j)].push_back({k, bc.i});
        }

        // potentials from u_0 = 0 by tree traversal
        std::vector<char> seen(static_cast<std::size_t>(nodes), 0);
        std::vector<int> stack{0};
        u[0] = 0.0;
        seen[0] = 1;
        while (!stack.empty()) {
            const int node = stack.back();
            stack.pop_back();
            for (auto [arc, other] : adj[static_cast<std::size_t>(node)]) {
                if (seen[static_cast<std::size_t>(other)]) continue;
                seen[static_cast<std::size_t>(other)] = 1;
                const auto& bc = basis[static_cast<std::size_t>(arc)];
                const double c = cost[static_cast<std::size_t>(bc.i) * n + bc.j];
                if (other >= m)
                    v[static_cast<std::size_t>(other - m)] = c - u[static_cast<std::size_t>(bc.i)];
                else
                    u[static_cast<std::size_t>(other)] = c - v[static_cast<std::size_t>(bc.j)];
                stack.push_back(other);
            }
        }

        // entering arc: most negative reduced cost, lowest (i,j) on ties
        // (row-major scan keeps the first minimizer). After a run of
        // degenerate pivots switch to Bland's first-negative rule, which
        // cannot cycle.
        int ei = -1, ej = -1;
        if (degenerate_run <= nodes) {
            double best = -tol;
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) {
                    const double red = cost[static_cast<std::size_t>(i) * n + j]
                                     - u[static_cast<std::size_t>(i)] - v[static_cast<std::size_t>(j)];
                    if (red < best) {
                        best = red;
                        ei = i;
                        ej = j;
                    }
                }
        } else {
            for (int i = 0; i < m && ei < 0; ++i)
                for (int j = 0; j < n; ++j) {
                    const double red = cost[static_cast<std::size_t>(i) * n + j]
                                     - u[static_cast<std::size_t>(i)] - v[static_cast<std::size_t>(j)];
                    if (red < -tol) {
                        ei = i;
                        ej = j;
                        break;
                    }
                }
        }
        if (ei < 0) break; // optimal

        if (++pivots > max_pivots)
            throw Error("PivotLimit", "transportation simplex failed to terminate");

        // cycle: tree path from row ei to col ej, plus the entering arc
        std::fill(parent_node.begin(), parent_node.end(), -1);
        std::vector<int> bfs{ei};
        parent_node[static_cast<std::size_t>(ei)] = ei;
        for (std::size_t head = 0; head < bfs.size(); ++head) {
            const int node = bfs[head];
            if (node == m + ej) break;
            for (auto [arc, other] : adj[static_cast<std::size_t>(node)]) {
                if (parent_node[static_cast<std::size_t>(other)] != -1) continue;
                parent_node[static_cast<std::size_t>(other)] = node;
                parent_arc[static_cast<std::size_t>(other)] = arc;
                bfs.push_back(other);
            }
        }

        // walk back col ej -> row ei; arcs alternate -,+,-,... starting at the
        // arc entering ej's column (mass leaves it)
        std::vector<int> path_arcs;
        for (int node = m + ej; node != ei; node = parent_node[static_cast<std::size_t>(node)])
            path_arcs.push_back(parent_arc[static_cast<std::size_t>(node)]);

        double theta = std::numeric_limits<double>::infinity();
        int leave = -1;
        auto lex_less = [&](int arc_a, int arc_b) {
            const auto& a = basis[static_cast<std::size_t>(arc_a)];
            const auto& b = basis[static_cast<std::size_t>(arc_b)];
            return a.i < b.i || (a.i == b.i && a.j < b.j);
        };
        for (std::size_t k = 0; k < path_arcs.size(); k += 2) {
            const int arc = path_arcs[k];
            const double mass = basis[static_cast<std::size_t>(arc)].mass;
            if (leave < 0 || mass < theta || (mass == theta && lex_less(arc, leave))) {
                theta = std::min(theta, mass);
                leave = arc;
            }
        }

        for (std::size_t k = 0; k < path_arcs.size(); ++k) {
            const double sign = (k % 2 == 0) ? -1.0 : 1.0;
            basis[static_cast<std::size_t>(path_arcs[k])].mass += sign * theta;
        }
        basis[static_cast<std::size_t>(leave)] = {ei, ej, theta};
        degenerate_run = theta > 0.0 ? 0 : degenerate_run + 1;
    }

    W2Result res;
    KahanAccumulator total;
    for (const auto& bc : basis) {
        if (bc.mass > 0.0) {
            res.plan.rows.push_back(bc.i);
            res.plan.cols.push_back(bc.j);
            res.plan.mass.push_back(bc.mass);
        }
        total.add(std::max(0.0, bc.mass) * cost[static_cast<std::size_t>(bc.i) * n + bc.j]);
    }
    res.value = std::sqrt(std::max(0.0, total.value()));
    return res;
}

namespace detail {

inline void require_equal_weights(const ParticleMeasure& mu, const ParticleMeasure& nu) {
    if (mu.size() != nu.size())
        throw Error("UnequalWeights", "supports must have equal size");
    const double w = 1.0 / static_cast<double>(mu.size());
    for (double x : mu.weights)
        if (std::abs(x - w) > 1e-12) throw Error("UnequalWeights", "weights must equal 1/n");
    for (double x : nu.weights)
        if (std::abs(x - w) > 1e-12) throw Error("UnequalWeights", "weights must equal 1/n");
}

} // namespace detail

// Permutation brute force (Birkhoff: equal-weight optima are permutations).
inline double w2_bruteforce(const ParticleMeasure& mu, const ParticleMeasure& nu) {
    detail::require_equal_weights(mu, nu);
    const int n = static_cast<int>(mu.size());
    if (n > 8) throw Error("SizeExceeded", "brute force capped at n = 8");
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    const double w = 1.0 / n;
    do {
        double c = 0.0;
        for (int i = 0; i < n; ++i)
            c += w * 0.5 * (mu.points[static_cast<std::size_t>(i)]
                            - nu.points[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]).norm2();
        best = std::min(best, c);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::sqrt(best);
}

// 1-D monotone rearrangement (the optimal map is the gradient of a convex
// function on the line: pair sorted quantiles).
inline double w2_1d(const ParticleMeasure& mu, const ParticleMeasure& nu) {
    detail::require_equal_weights(mu, nu);
    double yref = mu.points[0].y, scale = 0.0;
    for (const auto& p : mu.points) scale = std::max(scale, std::abs(p.x) + std::abs(p.y));
    for (const auto& p : nu.points) scale = std::max(scale, std::abs(p.x) + std::abs(p.y));
    for (const auto& p : mu.points)
        if (std::abs(p.y - yref) > 1e-12 * (1.0 + scale))
            throw Error("NotCollinear", "points must share a horizontal line");
    for (const auto& p : nu.points)
        if (std::abs(p.y - yref) > 1e-12 * (1.0 + scale))
            throw Error("NotCollinear", "points must share a horizontal line");

    std::vector<double> xs, ys;
    for (const auto& p : mu.points) xs.push_back(p.x);
    for (const auto& p : nu.points) ys.push_back(p.x);
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    KahanAccumulator c;
    const double w = 1.0 / static_cast<double>(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double d = xs[k] - ys[k];
        c.add(w * 0.5 * d * d);
    }
    return std::sqrt(std::max(0.0, c.value()));
}

// |mu'_t| by central differences: W2(mu_{k-1}, mu_{k+1}) / (t_{k+1}-t_{k-1}).
inline std::vector<std::pair<double, double>>
metric_derivative(const std::vector<std::pair<double, ParticleMeasure>>& curve) {
    if (curve.size() < 3) throw Error("TooFewSamples", "metric derivative needs >= 3 samples");
    for (std::size_t k = 1; k < curve.size(); ++k)
        if (!(curve[k].first > curve[k - 1].first))
            throw Error("TooFewSamples", "curve times must be strictly increasing");
    std::vector<std::pair<double, double>> out;
    for (std::size_t k = 1; k + 1 < curve.size(); ++k) {
        const double span = curve[k + 1].first - curve[k - 1].first;
        const double d = w2_exact(curve[k - 1].second, curve[k + 1].second).value;
        out.push_back({curve[k].first, d / span});
    }
    return out;
}

} // namespace wassflow
