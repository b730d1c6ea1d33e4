#pragma once

#include <cmath>

#include "kdvcn/grid.hpp"

namespace kdvcn {

namespace detail {

// C2 quintic smoothstep on [0,1] and its first two derivatives.
inline double smoothstep5(double t) { return ((6.0 * t - 15.0) * t + 10.0) * t * t * t; }
inline double smoothstep5_d1(double t) { return 30.0 * t * t * (1.0 - t) * (1.0 - t); }
inline double smoothstep5_d2(double t) { return ((120.0 * t - 180.0) * t + 60.0) * t; }

} // namespace detail

/// Cutoff profile omega: 1 on |x| < R, 0 on |x| >= R+1, quintic-smoothstep
/// transition on each band. C2, monotone on each band, 0 <= omega <= 1.
struct CutoffOmega {
    double radius_R;

    double value(double x) const {
        const double ax = std::abs(x);
        if (ax <= radius_R) return 1.0;
        if (ax >= radius_R + 1.0) return 0.0;
        return detail::smoothstep5(radius_R + 1.0 - ax);
    }
    double deriv1(double x) const {
        const double ax = std::abs(x);
        if (ax <= radius_R || ax >= radius_R + 1.0) return 0.0;
        const double d = -detail::smoothstep5_d1(radius_R + 1.0 - ax);
        return x > 0.0 ? d : -d;
    }
    double deriv2(double x) const {
        const double ax = std::abs(x);
        if (ax <= radius_R || ax >= radius_R + 1.0) return 0.0;
        return detail::smoothstep5_d2(radius_R + 1.0 - ax);
    }

    // integrand of p and the analytic derivatives of p
    double p1(double x) const { const double w = value(x); return w * w; }
    double p2(double x) const { return 2.0 * value(x) * deriv1(x); }
    double p3(double x) const {
        const double d1 = deriv1(x);
        return 2.0 * (d1 * d1 + value(x) * deriv2(x));
    }
};

/// Sampled weight p = 1 + int_{-inf}^x omega^2, its derivative samples and
/// the bound c_R on |p|, |p_x|, |p_xx|, |p_xxx|.
struct WeightProfile {
    double radius_R = 0.0;
    GridFunction p;
    GridFunction p1;
    GridFunction p2;
    GridFunction p3;
    double c_R = 0.0;
};

namespace detail {

// Composite Simpson of omega^2 over [a,b] with an even number of subintervals.
inline double simpson_p1(const CutoffOmega& om, double a, double b, int subs) {
    const double h = (b - a) / subs;
    double acc = om.p1(a) + om.p1(b);
    for (int i = 1; i < subs; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * om.p1(a + i * h);
    return acc * h / 3.0;
}

} // namespace detail

/// Build the weight profile of the localized smoothing estimate on a grid.
/// p comes from composite Simpson quadrature of omega^2 (64 subsamples per
/// cell); p1 = omega^2 exactly; p2, p3 analytically; c_R from a sampling 16x
/// finer than the grid.
inline WeightProfile build_weight(const Grid& grid, double radius_R) {
    if (!(radius_R > 0.0))
        throw ConfigError("build_weight: radius must be positive");
    const double L = grid.length();
    if (!(radius_R + 1.0 < 0.5 * L))
        throw ConfigError("build_weight: radius " + std::to_string(radius_R) +
                          " too large for domain length " + std::to_string(L));
    const double x_right = grid.x_left + L;
    if (grid.x_left > -(radius_R + 1.0) || x_right < radius_R + 1.0)
        throw ConfigError("build_weight: window does not contain the support of omega");

    const CutoffOmega om{radius_R};
    WeightProfile wp;
    wp.radius_R = radius_R;
    wp.p = GridFunction(grid);
    wp.p1 = GridFunction(grid);
    wp.p2 = GridFunction(grid);
    wp.p3 = GridFunction(grid);

    const std::int64_t n = grid.n_cells;
    double integral = 0.0;
    for (std::int64_t j = 0; j < n; ++j) {
        const double x = grid.x(j);
        wp.p[j] = 1.0 + integral;
        wp.p1[j] = om.p1(x);
        wp.p2[j] = om.p2(x);
        wp.p3[j] = om.p3(x);
        integral += detail::simpson_p1(om, x, grid.x(j + 1), 64);
    }

    // c_R on the 16x refined sampling; all four sup-norms in one sweep.
    double max_p = 0.0, max_p1 = 0.0, max_p2 = 0.0, max_p3 = 0.0;
    const double fine = grid.dx / 16.0;
    double running = 0.0;
    for (std::int64_t m = 0; m <= 16 * n; ++m) {
        const double x = grid.x_left + m * fine;
        max_p = std::max(max_p, std::abs(1.0 + running));
        max_p1 = std::max(max_p1, std::abs(om.p1(x)));
        max_p2 = std::max(max_p2, std::abs(om.p2(x)));
        max_p3 = std::max(max_p3, std::abs(om.p3(x)));
        running += detail::simpson_p1(om, x, x + fine, 4);
    }
    double c = std::max(std::max(max_p, max_p1), std::max(max_p2, max_p3));
    for (std::int64_t j = 0; j < n; ++j) {
        c = std::max(c, std::abs(wp.p[j]));
        c = std::max(c, std::abs(wp.p2[j]));
        c = std::max(c, std::abs(wp.p3[j]));
    }
    wp.c_R = c;
    return wp;
}

/// <v,w>_p = dx * sum_j p_j v_j w_j.
inline double weighted_inner(const GridFunction& v, const GridFunction& w, const WeightProfile& wp) {
    require_same_grid(v, w, "weighted_inner");
    require_same_grid(v, wp.p, "weighted_inner");
    double acc = 0.0;
    const std::size_t n = v.values.size();
    for (std::size_t j = 0; j < n; ++j) acc += wp.p.values[j] * v.values[j] * w.values[j];
    return v.grid.dx * acc;
}

inline double norm_p(const GridFunction& v, const WeightProfile& wp) {
    return std::sqrt(weighted_inner(v, v, wp));
}

} // namespace kdvcn
