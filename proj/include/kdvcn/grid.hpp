#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "kdvcn/errors.hpp"

namespace kdvcn {

/// Uniform periodic 1-D lattice. The window is [x_left, x_left + n_cells*dx)
/// and index arithmetic wraps modulo n_cells.
struct Grid {
    std::int64_t n_cells = 0;
    double dx = 0.0;
    double x_left = 0.0;

    Grid() = default;

    Grid(std::int64_t n, double dx_, double x_left_) : n_cells(n), dx(dx_), x_left(x_left_) {
        if (n_cells < 5)
            throw ConfigError("Grid: need at least 5 cells, got " + std::to_string(n_cells));
        if (!(dx > 0.0))
            throw ConfigError("Grid: dx must be positive");
    }

    /// Grid over [x_left, x_right) with n cells.
    static Grid over(double x_left, double x_right, std::int64_t n) {
        if (!(x_right > x_left))
            throw ConfigError("Grid: empty window");
        return Grid(n, (x_right - x_left) / static_cast<double>(n), x_left);
    }

    double x(std::int64_t j) const { return x_left + static_cast<double>(j) * dx; }
    double length() const { return static_cast<double>(n_cells) * dx; }

    std::int64_t wrap(std::int64_t j) const {
        std::int64_t m = j % n_cells;
        return m < 0 ? m + n_cells : m;
    }

    bool operator==(const Grid& o) const {
        return n_cells == o.n_cells && dx == o.dx && x_left == o.x_left;
    }
};

/// Real-valued samples on a Grid, one value per node.
struct GridFunction {
    Grid grid;
    std::vector<double> values;

    GridFunction() = default;
    explicit GridFunction(const Grid& g) : grid(g), values(static_cast<std::size_t>(g.n_cells), 0.0) {}
    GridFunction(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
        if (static_cast<std::int64_t>(values.size()) != grid.n_cells)
            throw DimensionError("GridFunction: value count does not match grid");
    }

    std::int64_t size() const { return grid.n_cells; }
    double& operator[](std::int64_t j) { return values[static_cast<std::size_t>(j)]; }
    double operator[](std::int64_t j) const { return values[static_cast<std::size_t>(j)]; }
};

inline void require_same_grid(const GridFunction& v, const GridFunction& w, const char* op) {
    if (!(v.grid == w.grid))
        throw DimensionError(std::string(op) + ": operands live on different grids");
}

/// <v,w> = dx * sum_j v_j w_j, accumulated left to right.
inline double inner(const GridFunction& v, const GridFunction& w) {
    require_same_grid(v, w, "inner");
    double acc = 0.0;
    const std::size_t n = v.values.size();
    for (std::size_t j = 0; j < n; ++j) acc += v.values[j] * w.values[j];
    return v.grid.dx * acc;
}

inline double norm_l2(const GridFunction& v) {
    double acc = 0.0;
    for (double x : v.values) acc += x * x;
    return std::sqrt(v.grid.dx * acc);
}

inline double norm_inf(const GridFunction& v) {
    double m = 0.0;
    for (double x : v.values) m = std::max(m, std::abs(x));
    return m;
}

} // namespace kdvcn
