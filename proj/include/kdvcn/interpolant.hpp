#pragma once

#include <cmath>

#include "kdvcn/grid.hpp"
#include "kdvcn/operators.hpp"

namespace kdvcn {

/**
 * Space-time reconstruction between two consecutive snapshots. In space each
 * cell [x_j, x_{j+1}) carries the cubic
 *
 *   u(x) = u_j + (x-x_j) D+u_j + 1/2 (x-x_j)^2 D+D-u_j + 1/6 (x-x_j)^3 D+DD-u_j,
 *
 * and the time blend is linear between the two levels. This is a diagnostic
 * surface only; the stepper never consumes interpolated values.
 */
class SpaceTimeSlab {
public:
    SpaceTimeSlab(GridFunction u_lo, GridFunction u_hi, double t_lo, double t_hi)
        : u_lo_(std::move(u_lo)), u_hi_(std::move(u_hi)), t_lo_(t_lo), t_hi_(t_hi) {
        require_same_grid(u_lo_, u_hi_, "SpaceTimeSlab");
        if (!(t_hi_ > t_lo_)) throw ConfigError("SpaceTimeSlab: t_hi must exceed t_lo");
        d1_lo_ = d_plus(u_lo_);
        d1_hi_ = d_plus(u_hi_);
        d2_lo_ = d_plus(d_minus(u_lo_));
        d2_hi_ = d_plus(d_minus(u_hi_));
        d3_lo_ = d_plus(d_central(d_minus(u_lo_)));
        d3_hi_ = d_plus(d_central(d_minus(u_hi_)));
    }

    const Grid& grid() const { return u_lo_.grid; }
    double t_lo() const { return t_lo_; }
    double t_hi() const { return t_hi_; }
    const GridFunction& lower() const { return u_lo_; }
    const GridFunction& upper() const { return u_hi_; }

    double eval(double x, double t) const {
        const Cell c = locate(x);
        return blend(space_value(c, u_lo_, d1_lo_, d2_lo_, d3_lo_),
                     space_value(c, u_hi_, d1_hi_, d2_hi_, d3_hi_), t);
    }

    /// Analytic spatial derivative of the piecewise polynomial, order 1..3.
    double eval_dx(double x, double t, int order) const {
        const Cell c = locate(x);
        double lo, hi;
        switch (order) {
            case 1:
                lo = d1_lo_[c.j] + c.xi * (d2_lo_[c.j] + 0.5 * c.xi * d3_lo_[c.j]);
                hi = d1_hi_[c.j] + c.xi * (d2_hi_[c.j] + 0.5 * c.xi * d3_hi_[c.j]);
                break;
            case 2:
                lo = d2_lo_[c.j] + c.xi * d3_lo_[c.j];
                hi = d2_hi_[c.j] + c.xi * d3_hi_[c.j];
                break;
            case 3:
                lo = d3_lo_[c.j];
                hi = d3_hi_[c.j];
                break;
            default:
                throw ConfigError("eval_dx: order must be 1, 2 or 3");
        }
        return blend(lo, hi, t);
    }

    /// Forward time difference D+^t u(x); constant in t on the slab.
    double eval_dt(double x) const {
        const Cell c = locate(x);
        const double lo = space_value(c, u_lo_, d1_lo_, d2_lo_, d3_lo_);
        const double hi = space_value(c, u_hi_, d1_hi_, d2_hi_, d3_hi_);
        return (hi - lo) / (t_hi_ - t_lo_);
    }

private:
    struct Cell {
        std::int64_t j;
        double xi;   // x - x_j after periodic reduction
    };

    Cell locate(double x) const {
        const Grid& g = u_lo_.grid;
        const double L = g.length();
        double xr = x - L * std::floor((x - g.x_left) / L);
        if (xr < g.x_left) xr = g.x_left;   // reduction rounding noise
        std::int64_t j = static_cast<std::int64_t>(std::floor((xr - g.x_left) / g.dx));
        if (j < 0) j = 0;
        if (j >= g.n_cells) j = g.n_cells - 1;
        // the floor hint can be off by one ulp; enforce right-open cells
        // exactly against the stored node coordinates
        if (j + 1 < g.n_cells && xr >= g.x(j + 1)) ++j;
        else if (j > 0 && xr < g.x(j)) --j;
        double xi = xr - g.x(j);
        if (xi < 0.0) xi = 0.0;
        return {j, xi};
    }

    static double space_value(const Cell& c, const GridFunction& u, const GridFunction& d1,
                              const GridFunction& d2, const GridFunction& d3c) {
        return u[c.j] + c.xi * (d1[c.j] + c.xi * (0.5 * d2[c.j] + c.xi * (d3c[c.j] / 6.0)));
    }

    double blend(double lo, double hi, double t) const {
        if (t < t_lo_ || t > t_hi_)
            throw ConfigError("SpaceTimeSlab: t outside the slab");
        const double alpha = (t - t_lo_) / (t_hi_ - t_lo_);
        return (1.0 - alpha) * lo + alpha * hi;
    }

    GridFunction u_lo_, u_hi_;
    double t_lo_, t_hi_;
    GridFunction d1_lo_, d1_hi_, d2_lo_, d2_hi_, d3_lo_, d3_hi_;
};

} // namespace kdvcn
