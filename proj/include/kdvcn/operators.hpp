#pragma once

#include <cstdint>

#include "kdvcn/grid.hpp"

namespace kdvcn {

/// (shift(v,k))_j = v_{(j+k) mod n}.
inline GridFunction shift(const GridFunction& v, std::int64_t k) {
    GridFunction out(v.grid);
    const std::int64_t n = v.size();
    for (std::int64_t j = 0; j < n; ++j) out[j] = v[v.grid.wrap(j + k)];
    return out;
}

namespace detail {

// out_j = (v_{j+1} - v_j)/dx, periodic seam handled explicitly.
inline void d_plus_into(const GridFunction& v, GridFunction& out) {
    const std::int64_t n = v.size();
    const double inv = 1.0 / v.grid.dx;
    for (std::int64_t j = 0; j + 1 < n; ++j) out[j] = (v[j + 1] - v[j]) * inv;
    out[n - 1] = (v[0] - v[n - 1]) * inv;
}

inline void d_minus_into(const GridFunction& v, GridFunction& out) {
    const std::int64_t n = v.size();
    const double inv = 1.0 / v.grid.dx;
    out[0] = (v[0] - v[n - 1]) * inv;
    for (std::int64_t j = 1; j < n; ++j) out[j] = (v[j] - v[j - 1]) * inv;
}

inline void d_central_into(const GridFunction& v, GridFunction& out) {
    const std::int64_t n = v.size();
    const double inv = 1.0 / (2.0 * v.grid.dx);
    out[0] = (v[1] - v[n - 1]) * inv;
    for (std::int64_t j = 1; j + 1 < n; ++j) out[j] = (v[j + 1] - v[j - 1]) * inv;
    out[n - 1] = (v[0] - v[n - 2]) * inv;
}

// D- D D+ without allocating; tmp1/tmp2 are scratch on the same grid.
inline void d3_into(const GridFunction& v, GridFunction& tmp1, GridFunction& tmp2,
                    GridFunction& out) {
    d_plus_into(v, tmp1);
    d_central_into(tmp1, tmp2);
    d_minus_into(tmp2, out);
}

} // namespace detail

/// Forward difference D+ v = (S+ v - v)/dx.
inline GridFunction d_plus(const GridFunction& v) {
    GridFunction out(v.grid);
    detail::d_plus_into(v, out);
    return out;
}

/// Backward difference D- v = (v - S- v)/dx.
inline GridFunction d_minus(const GridFunction& v) {
    GridFunction out(v.grid);
    detail::d_minus_into(v, out);
    return out;
}

/// Central difference D = (D+ + D-)/2.
inline GridFunction d_central(const GridFunction& v) {
    GridFunction out(v.grid);
    detail::d_central_into(v, out);
    return out;
}

/// Third difference D- D D+, evaluated as the exact operator composition.
/// The simplified 5-point stencil (v_{j+2} - 2v_{j+1} + 2v_{j-1} - v_{j-2})/(2 dx^3)
/// is algebraically equal but rounds differently; the composition is canonical here.
inline GridFunction d3(const GridFunction& v) {
    if (v.size() < 5)
        throw DimensionError("d3: stencil spans 5 nodes, grid too small");
    GridFunction a(v.grid), b(v.grid), out(v.grid);
    detail::d_plus_into(v, a);
    detail::d_central_into(a, b);
    detail::d_minus_into(b, out);
    return out;
}

/// tilde average (S+ v + v + S- v)/3.
inline GridFunction tilde_avg(const GridFunction& v) {
    GridFunction out(v.grid);
    const std::int64_t n = v.size();
    for (std::int64_t j = 0; j < n; ++j) {
        const double up = v[v.grid.wrap(j + 1)];
        const double dn = v[v.grid.wrap(j - 1)];
        out[j] = (up + v[j] + dn) / 3.0;
    }
    return out;
}

/// bar average (S+ v + S- v)/2.
inline GridFunction bar_avg(const GridFunction& v) {
    GridFunction out(v.grid);
    const std::int64_t n = v.size();
    for (std::int64_t j = 0; j < n; ++j)
        out[j] = (v[v.grid.wrap(j + 1)] + v[v.grid.wrap(j - 1)]) / 2.0;
    return out;
}

/// Nonlinear convection term G(v) = tilde(v) * Dv.
inline GridFunction nonlinear_g(const GridFunction& v) {
    GridFunction t = tilde_avg(v);
    GridFunction d(v.grid);
    detail::d_central_into(v, d);
    const std::int64_t n = v.size();
    for (std::int64_t j = 0; j < n; ++j) t[j] *= d[j];
    return t;
}

/// Discrete Sobolev norm ||v|| + ||D+ v|| + ||D+ D- v|| + ||D- D D+ v||.
inline double norm_h3(const GridFunction& v) {
    GridFunction a(v.grid), b(v.grid);
    detail::d_plus_into(v, a);        // D+ v
    double s = norm_l2(v) + norm_l2(a);
    detail::d_minus_into(v, b);
    GridFunction c(v.grid);
    detail::d_plus_into(b, c);        // D+ D- v
    s += norm_l2(c);
    detail::d_central_into(a, b);
    detail::d_minus_into(b, c);       // D- D D+ v
    s += norm_l2(c);
    return s;
}

} // namespace kdvcn
