#pragma once

#include "wassflow/core.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <vector>

namespace wassflow {

// ---------------------------------------------------------------------------
// Uniform rectangular grid, cell-averaged densities (finite-volume
// convention), boolean cell masks. Storage is row-major in j then i:
// index = j*nx + i, cell centers at (x0+(i+1/2)hx, y0+(j+1/2)hy).
// ---------------------------------------------------------------------------

struct GridSpec {
    int nx = 2, ny = 2;
    double x0 = 0.0, y0 = 0.0;
    double lx = 1.0, ly = 1.0;

    GridSpec() = default;
    GridSpec(int nx_, int ny_, double x0_, double y0_, double lx_, double ly_)
        : nx(nx_), ny(ny_), x0(x0_), y0(y0_), lx(lx_), ly(ly_) {
        if (nx < 2 || ny < 2) throw Error("BadGrid", "nx, ny must be >= 2");
        if (!(lx > 0.0) || !(ly > 0.0)) throw Error("BadGrid", "lx, ly must be > 0");
    }

    double hx() const { return lx / nx; }
    double hy() const { return ly / ny; }
    double cell_area() const { return hx() * hy(); }
    int cells() const { return nx * ny; }
    int idx(int i, int j) const { return j * nx + i; }
    Vec2 center(int i, int j) const {
        return {x0 + (i + 0.5) * hx(), y0 + (j + 0.5) * hy()};
    }
    double diameter() const { return std::sqrt(lx * lx + ly * ly); }
    bool contains(Vec2 p) const {
        return p.x >= x0 && p.x <= x0 + lx && p.y >= y0 && p.y <= y0 + ly;
    }
    bool same_as(const GridSpec& o) const {
        return nx == o.nx && ny == o.ny && x0 == o.x0 && y0 == o.y0 && lx == o.lx && ly == o.ly;
    }
};

struct GridDensity {
    GridSpec grid;
    std::vector<double> values; // density per unit area, nonnegative

    GridDensity() = default;
    explicit GridDensity(const GridSpec& g, double fill = 0.0)
        : grid(g), values(static_cast<std::size_t>(g.cells()), fill) {}

    double& at(int i, int j) { return values[static_cast<std::size_t>(grid.idx(i, j))]; }
    double at(int i, int j) const { return values[static_cast<std::size_t>(grid.idx(i, j))]; }
};

struct CellMask {
    GridSpec grid;
    std::vector<char> flags;

    CellMask() = default;
    explicit CellMask(const GridSpec& g, bool fill = false)
        : grid(g), flags(static_cast<std::size_t>(g.cells()), fill ? 1 : 0) {}

    bool at(int i, int j) const { return flags[static_cast<std::size_t>(grid.idx(i, j))] != 0; }
    void set(int i, int j, bool v) { flags[static_cast<std::size_t>(grid.idx(i, j))] = v ? 1 : 0; }
    int count() const { return static_cast<int>(std::count(flags.begin(), flags.end(), char(1))); }
};

inline double total_mass(const GridDensity& d) {
    KahanAccumulator acc;
    for (double v : d.values) acc.add(v);
    return acc.value() * d.grid.cell_area();
}

// Scales values so the total mass is exactly 1 (compensated sum).
inline GridDensity normalize(const GridDensity& d) {
    bool any_positive = false;
    for (double v : d.values) {
        if (v < 0.0) throw Error("NegativeDensity", "density value < 0");
        if (v > 0.0) any_positive = true;
    }
    if (!any_positive) throw Error("AllZeroDensity", "cannot normalize the zero density");
    const double mass = total_mass(d);
    GridDensity out = d;
    const double inv = 1.0 / mass;
    for (double& v : out.values) v *= inv;
    return out;
}

// Midpoint quadrature of |x|^2 rho.
inline double second_moment(const GridDensity& d) {
    KahanAccumulator acc;
    for (int j = 0; j < d.grid.ny; ++j)
        for (int i = 0; i < d.grid.nx; ++i)
            acc.add(d.grid.center(i, j).norm2() * d.at(i, j));
    return acc.value() * d.grid.cell_area();
}

inline Vec2 centroid(const GridDensity& d) {
    KahanAccumulator ax, ay, am;
    for (int j = 0; j < d.grid.ny; ++j)
        for (int i = 0; i < d.grid.nx; ++i) {
            const Vec2 c = d.grid.center(i, j);
            const double v = d.at(i, j);
            ax.add(c.x * v);
            ay.add(c.y * v);
            am.add(v);
        }
    const double m = am.value();
    return {ax.value() / m, ay.value() / m};
}

// Discrete Omega_mu = Int(supp[mu]): flags cells with value > tol. With
// erode_interior, a cell additionally needs all 4 neighbors above tol
// (cells outside the box count as below).
inline CellMask support_projection(const GridDensity& d, double tol, bool erode_interior = false) {
    if (tol < 0.0) throw Error("BadTolerance", "tol must be >= 0");
    CellMask mask(d.grid);
    for (int j = 0; j < d.grid.ny; ++j)
        for (int i = 0; i < d.grid.nx; ++i)
            mask.set(i, j, d.at(i, j) > tol);
    if (!erode_interior) return mask;
    CellMask eroded(d.grid);
    for (int j = 0; j < d.grid.ny; ++j)
        for (int i = 0; i < d.grid.nx; ++i) {
            const bool inside = mask.at(i, j)
                && i > 0 && mask.at(i - 1, j) && i + 1 < d.grid.nx && mask.at(i + 1, j)
                && j > 0 && mask.at(i, j - 1) && j + 1 < d.grid.ny && mask.at(i, j + 1);
            eroded.set(i, j, inside);
        }
    return eroded;
}

// Bilinear interpolation of cell-centered values; zero outside the box
// (densities here are compactly supported inside it).
inline double sample_bilinear(const GridDensity& d, Vec2 p) {
    const GridSpec& g = d.grid;
    const double u = (p.x - g.x0) / g.hx() - 0.5;
    const double v = (p.y - g.y0) / g.hy() - 0.5;
    const int i0 = static_cast<int>(std::floor(u));
    const int j0 = static_cast<int>(std::floor(v));
    const double fu = u - i0;
    const double fv = v - j0;
    auto val = [&](int i, int j) -> double {
        if (i < 0 || i >= g.nx || j < 0 || j >= g.ny) return 0.0;
        return d.at(i, j);
    };
    return (1 - fu) * (1 - fv) * val(i0, j0) + fu * (1 - fv) * val(i0 + 1, j0)
         + (1 - fu) * fv * val(i0, j0 + 1) + fu * fv * val(i0 + 1, j0 + 1);
}

// ---------------------------------------------------------------------------
// Serialization. CSV: header `i,j,x,y,rho`, row-major in j then i, 12
// significant digits. PGM: P2, maxval 65535, linear scaling from [0, max].
// ---------------------------------------------------------------------------

inline void write_csv(const GridDensity& d, std::ostream& os) {
    os << "i,j,x,y,rho\n";
    char buf[128];
    for (int j = 0; j < d.grid.ny; ++j)
        for (int i = 0; i < d.grid.nx; ++i) {
            const Vec2 c = d.grid.center(i, j);
            std::snprintf(buf, sizeof buf, "%d,%d,%.11e,%.11e,%.11e\n", i, j, c.x, c.y, d.at(i, j));
            os << buf;
        }
}

inline void write_pgm(const GridDensity& d, std::ostream& os) {
    double vmax = 0.0;
    for (double v : d.values) vmax = std::max(vmax, v);
    os << "P2\n" << d.grid.nx << " " << d.grid.ny << "\n65535\n";
    for (int j = d.grid.ny - 1; j >= 0; --j) {
        for (int i = 0; i < d.grid.nx; ++i) {
            const int level = vmax > 0.0
                ? static_cast<int>(std::lround(65535.0 * d.at(i, j) / vmax))
                : 0;
            os << level << (i + 1 == d.grid.nx ? '\n' : ' ');
        }
    }
}

} // namespace wassflow
