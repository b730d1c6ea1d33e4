#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>

#include "kdvcn/grid.hpp"
#include "kdvcn/io.hpp"
#include "kdvcn/stepper.hpp"

namespace kdvcn {

/// One-soliton solution, amplitude 9, speed 3.
inline double one_soliton(double x, double t) {
    const double th = std::tanh(0.5 * std::sqrt(3.0) * (x - 3.0 * t));
    return 9.0 * (1.0 - th * th);
}

struct SolitonParams {
    double a = 0.5;
    double b = 1.0;

    bool operator==(const SolitonParams&) const = default;

    void validate() const {
        if (!(a > 0.0 && b > a)) throw ConfigError("SolitonParams: need 0 < a < b");
    }
};

/**
 * Two-soliton solution with speeds 2a and 2b. The textbook csch/coth form has
 * a removable singularity where the fast-soliton argument vanishes; written
 * with numerator and denominator multiplied through by sinh^2 and then scaled
 * by sech^2 of the same argument, the expression
 *
 *         6(b-a) [ b sech^2(tb) + a sech^2(ta) tanh^2(tb) ]
 *   w = ---------------------------------------------------- ,
 *         [ sqrt(a) tanh(ta) tanh(tb) - sqrt(b) ]^2
 *
 * ta = sqrt(a/2)(x-2at), tb = sqrt(b/2)(x-2bt), is finite and smooth for all
 * arguments (the denominator is bounded below by (sqrt(b)-sqrt(a))^2) and free
 * of overflow in the tails.
 */
inline double two_soliton(double x, double t, const SolitonParams& p) {
    p.validate();
    const double ta = std::sqrt(p.a / 2.0) * (x - 2.0 * p.a * t);
    const double tb = std::sqrt(p.b / 2.0) * (x - 2.0 * p.b * t);
    const double tha = std::tanh(ta);
    const double thb = std::tanh(tb);
    const double sech2a = 1.0 / (std::cosh(ta) * std::cosh(ta));
    const double sech2b = 1.0 / (std::cosh(tb) * std::cosh(tb));
    const double num = 6.0 * (p.b - p.a) * (p.b * sech2b + p.a * sech2a * thb * thb);
    const double den = std::sqrt(p.a) * tha * thb - std::sqrt(p.b);
    return num / (den * den);
}

/// Ramp in L2 but in no positive-order Sobolev space: (x+1)/2 on [-1,1], 0
/// elsewhere in the periodic cell [-5,5).
inline double nonsmooth_l2(double x) {
    if (x >= -1.0 && x <= 1.0) return 0.5 * (x + 1.0);
    return 0.0;
}

/// Samples f at the grid nodes; rejects non-finite values.
inline GridFunction sample(const std::function<double(double)>& f, const Grid& grid) {
    GridFunction u(grid);
    for (std::int64_t j = 0; j < grid.n_cells; ++j) {
        const double v = f(grid.x(j));
        if (!std::isfinite(v))
            throw ConfigError("sample: non-finite value at node " + std::to_string(j) + " (x=" +
                              format_g17(grid.x(j)) + ")");
        u[j] = v;
    }
    return u;
}

enum class Case { OneSoliton, TwoSoliton, NonsmoothL2, CustomFile };

inline const char* case_name(Case c) {
    switch (c) {
        case Case::OneSoliton: return "one_soliton";
        case Case::TwoSoliton: return "two_soliton";
        case Case::NonsmoothL2: return "nonsmooth_l2";
        case Case::CustomFile: return "custom_file";
    }
    return "?";
}

/// A test case: which initial datum, on which window, starting at which
/// solution time. t_start is the time argument fed to the closed form (the
/// run clock itself always starts at zero).
struct CaseSpec {
    Case kind = Case::OneSoliton;
    double x_left = -10.0;
    double x_right = 10.0;
    double t_start = -1.0;
    SolitonParams soliton;
    std::string initial_file;   // CustomFile only: snapshot CSV

    bool operator==(const CaseSpec&) const = default;

    /// Exact solution at solution time `ts`; only the soliton cases have one.
    double exact(double x, double ts) const {
        switch (kind) {
            case Case::OneSoliton: return one_soliton(x, ts);
            case Case::TwoSoliton: return two_soliton(x, ts, soliton);
            default: throw ConfigError("exact: no closed form for this case");
        }
    }

    bool has_exact() const { return kind == Case::OneSoliton || kind == Case::TwoSoliton; }

    GridFunction initial_data(std::int64_t n) const {
        const Grid grid = Grid::over(x_left, x_right, n);
        switch (kind) {
            case Case::OneSoliton:
            case Case::TwoSoliton:
                return sample([&](double x) { return exact(x, t_start); }, grid);
            case Case::NonsmoothL2:
                return sample(nonsmooth_l2, grid);
            case Case::CustomFile: {
                Snapshot snap = read_snapshot(initial_file);
                const GridFunction& fine = snap.u;
                if (fine.grid.n_cells % n != 0 || fine.grid.x_left != grid.x_left ||
                    std::abs(fine.grid.length() - grid.length()) > 1e-12 * grid.length())
                    throw ConfigError("initial_data: file grid is not a refinement of N=" +
                                      std::to_string(n));
                const std::int64_t stride = fine.grid.n_cells / n;
                GridFunction u(grid);
                for (std::int64_t j = 0; j < n; ++j) u[j] = fine[j * stride];
                return u;
            }
        }
        throw ConfigError("initial_data: unknown case");
    }
};

/// Reference-cache directory: KDVCN_CACHE if set, else ./.kdvcn-cache.
inline std::filesystem::path reference_cache_dir() {
    if (const char* env = std::getenv("KDVCN_CACHE"); env != nullptr && *env != '\0')
        return env;
    return ".kdvcn-cache";
}

namespace detail {

inline std::string reference_key(const CaseSpec& cs, std::int64_t n_fine, double t_end,
                                 const StepperConfig& cfg, double weight_radius) {
    std::string s;
    s += case_name(cs.kind);
    s += '|' + format_g17(cs.x_left) + '|' + format_g17(cs.x_right) + '|' + format_g17(cs.t_start);
    s += '|' + format_g17(cs.soliton.a) + '|' + format_g17(cs.soliton.b);
    s += '|' + cs.initial_file;
    s += '|' + std::to_string(n_fine) + '|' + format_g17(t_end);
    s += '|' + std::string(cfg.regime == CflRegime::H3 ? "h3" : "l2");
    s += '|' + format_g17(cfg.contraction_L) + '|' + format_g17(cfg.fp_tol) + '|' +
         format_g17(cfg.lin_tol) + '|' + std::to_string(cfg.fp_max_iter);
    s += '|' + (cfg.dt_cap ? format_g17(*cfg.dt_cap) : std::string("none"));
    s += '|' + format_g17(weight_radius);
    return s;
}

} // namespace detail

/**
 * Fine-grid reference solution: evolves the case's initial datum on n_fine
 * nodes for duration t_end (frozen CFL step from the initial datum) and caches
 * the final state on disk keyed by the full configuration. A corrupt cache
 * entry is recomputed with a warning.
 */
inline GridFunction make_reference(const CaseSpec& cs, std::int64_t n_fine, double t_end,
                                   const StepperConfig& cfg, double weight_radius,
                                   const std::filesystem::path& cache_dir = reference_cache_dir()) {
    const std::string key = detail::reference_key(cs, n_fine, t_end, cfg, weight_radius);
    const std::filesystem::path file = cache_dir / case_name(cs.kind) /
        (std::to_string(n_fine) + "_" + format_g17(t_end) + "_" + fnv1a64_hex(key) + ".csv");

    if (std::filesystem::exists(file)) {
        try {
            Snapshot snap = read_snapshot(file);
            if (snap.u.grid.n_cells != n_fine)
                throw ConfigError("cached reference has wrong node count");
            for (double v : snap.u.values)
                if (!std::isfinite(v)) throw ConfigError("cached reference has non-finite values");
            return std::move(snap.u);
        } catch (const std::exception& e) {
            std::cerr << "kdvcn: reference cache entry " << file.string()
                      << " unusable (" << e.what() << "); recomputing\n";
        }
    }

    GridFunction u0 = cs.initial_data(n_fine);
    const WeightProfile wp = build_weight(u0.grid, weight_radius);
    CrankNicolsonStepper stepper(u0.grid, cfg, &wp);
    const double dt = cfl_dt(u0, cfg, &wp);
    RunState final = stepper.evolve(std::move(u0), t_end, TimeStepPolicy::fixed(dt));

    write_snapshot(file, final.u,
                   {{"case", case_name(cs.kind)},
                    {"t", format_g17(t_end)},
                    {"config", fnv1a64_hex(key)}});
    return std::move(final.u);
}

} // namespace kdvcn
