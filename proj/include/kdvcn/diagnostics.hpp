#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>

#include "kdvcn/grid.hpp"
#include "kdvcn/operators.hpp"
#include "kdvcn/weight.hpp"

namespace kdvcn {

/// Mass/momentum/energy ratios against the initial state. A ratio whose
/// denominator vanishes (relative to the natural absolute scale) is left
/// unset rather than dividing by noise.
struct ConservationRecord {
    std::optional<double> c1;
    std::optional<double> c2;
    std::optional<double> c3;
    double t = 0.0;
};

namespace detail {

inline std::optional<double> guarded_ratio(double num, double den, double den_scale) {
    if (den == 0.0 || std::abs(den) < 1e-12 * den_scale) return std::nullopt;
    return num / den;
}

// dx * sum((D+u)^2 - u^3/3) and the matching absolute scale.
inline std::pair<double, double> energy_functional(const GridFunction& u) {
    GridFunction du = d_plus(u);
    double acc = 0.0, scale = 0.0;
    for (std::int64_t j = 0; j < u.size(); ++j) {
        const double grad2 = du[j] * du[j];
        const double cube = u[j] * u[j] * u[j] / 3.0;
        acc += grad2 - cube;
        scale += grad2 + std::abs(cube);
    }
    return {u.grid.dx * acc, u.grid.dx * scale};
}

} // namespace detail

inline ConservationRecord conserved(const GridFunction& u, const GridFunction& u0, double t = 0.0) {
    require_same_grid(u, u0, "conserved");
    ConservationRecord rec;
    rec.t = t;

    double sum_u = 0.0, sum_u0 = 0.0, abs_u0 = 0.0;
    for (std::int64_t j = 0; j < u.size(); ++j) {
        sum_u += u[j];
        sum_u0 += u0[j];
        abs_u0 += std::abs(u0[j]);
    }
    rec.c1 = detail::guarded_ratio(sum_u, sum_u0, abs_u0);

    const double n0 = norm_l2(u0);
    rec.c2 = detail::guarded_ratio(norm_l2(u), n0, n0);

    const auto [e_num, e_num_scale] = detail::energy_functional(u);
    const auto [e_den, e_den_scale] = detail::energy_functional(u0);
    (void)e_num_scale;
    rec.c3 = detail::guarded_ratio(e_num, e_den, e_den_scale);
    return rec;
}

/// Relative l2 error of u against a reference living on the same grid or on a
/// nested refinement of it; the reference is restricted to the coarse nodes by
/// exact index stride. On a uniform periodic grid the trapezoidal rule equals
/// the dx-weighted sum, so the dx factors cancel in the ratio.
inline double relative_error(const GridFunction& u, const GridFunction& ref) {
    const std::int64_t nc = u.grid.n_cells, nf = ref.grid.n_cells;
    if (nf % nc != 0 || u.grid.x_left != ref.grid.x_left ||
        std::abs(u.grid.length() - ref.grid.length()) > 1e-12 * u.grid.length())
        throw DimensionError("relative_error: grids are not nested");
    const std::int64_t stride = nf / nc;
    double num = 0.0, den = 0.0;
    for (std::int64_t j = 0; j < nc; ++j) {
        const double r = ref[j * stride];
        const double d = u[j] - r;
        num += d * d;
        den += r * r;
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(num / den);
}

/// Convergence rate (ln E1 - ln E2)/(ln N2 - ln N1).
inline double rate(double e_coarse, std::int64_t n_coarse, double e_fine, std::int64_t n_fine) {
    if (!(e_coarse > 0.0) || !(e_fine > 0.0))
        throw std::domain_error("rate: error values must be positive");
    if (n_coarse <= 0 || n_fine <= 0 || n_coarse == n_fine)
        throw std::domain_error("rate: invalid grid sizes");
    return (std::log(e_coarse) - std::log(e_fine)) /
           (std::log(static_cast<double>(n_fine)) - std::log(static_cast<double>(n_coarse)));
}

/// Running dt*dx*sum_n sum_{|x_j|<=R-1} (D+ u^{n+1/2})^2, the discrete local
/// smoothing quantity. Monotone nondecreasing over a run.
struct SmoothingAccumulator {
    double total = 0.0;
    double radius_R = 0.0;
};

inline SmoothingAccumulator smoothing_update(SmoothingAccumulator acc, const GridFunction& u_half,
                                             double dt) {
    GridFunction du = d_plus(u_half);
    double sum = 0.0;
    for (std::int64_t j = 0; j < u_half.size(); ++j) {
        if (std::abs(u_half.grid.x(j)) <= acc.radius_R - 1.0) sum += du[j] * du[j];
    }
    acc.total += dt * u_half.grid.dx * sum;
    return acc;
}

inline double track_h3(const GridFunction& u) { return norm_h3(u); }
inline double track_p(const GridFunction& u, const WeightProfile& wp) { return norm_p(u, wp); }

} // namespace kdvcn
