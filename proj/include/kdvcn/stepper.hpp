#pragma once

#include <cfloat>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kdvcn/grid.hpp"
#include "kdvcn/operators.hpp"
#include "kdvcn/solver.hpp"
#include "kdvcn/weight.hpp"

namespace kdvcn {

enum class CflRegime { H3, L2 };

struct StepperConfig {
    double contraction_L = 0.5;   // L of the solvability lemmas, in (0,1)
    CflRegime regime = CflRegime::H3;
    double fp_tol = 1e-12;        // fixed-point stop: ||dw|| <= fp_tol * ||u^n||
    int fp_max_iter = 50;
    double lin_tol = 1e-12;       // relative residual bound for each linear solve
    std::optional<double> dt_cap;

    bool operator==(const StepperConfig&) const = default;

    /// K = (4-L)/(1-L) in the h3 regime, (5-L)/(1-L) in the weighted regime.
    double contraction_K() const {
        const double L = contraction_L;
        return regime == CflRegime::H3 ? (4.0 - L) / (1.0 - L) : (5.0 - L) / (1.0 - L);
    }

    void validate() const {
        if (!(contraction_L > 0.0 && contraction_L < 1.0))
            throw ConfigError("StepperConfig: L must lie in (0,1)");
        if (!(fp_tol > 0.0) || !(lin_tol > 0.0))
            throw ConfigError("StepperConfig: tolerances must be positive");
        if (fp_max_iter < 1) throw ConfigError("StepperConfig: fp_max_iter must be >= 1");
        if (dt_cap && !(*dt_cap > 0.0)) throw ConfigError("StepperConfig: dt_cap must be positive");
    }
};

struct StepStats {
    double dt_used = 0.0;
    int fp_iterations = 0;
    double final_increment_norm = 0.0;
    double lin_residual_max = 0.0;
    double l2_before = 0.0;
    double l2_after = 0.0;
    /// max over l >= 2 of ||dw^l|| / ||dw^{l-1}||; 0 when fewer than 3 sweeps ran.
    double max_increment_ratio = 0.0;
};

struct RunState {
    GridFunction u;
    double t = 0.0;
    std::int64_t step_index = 0;
    StepStats last_stats;
};

/// CFL time step for the current state. H3 regime: dt = L*dx/(K*||u||_h3).
/// L2 regime: dt = (7L/8K)*dx^(3/2)/||u||_p, additionally capped by 1/(4 c_R).
inline double cfl_dt(const GridFunction& u, const StepperConfig& cfg,
                     const WeightProfile* wp = nullptr) {
    const double dx = u.grid.dx;
    const double K = cfg.contraction_K();
    double bound = std::numeric_limits<double>::infinity();
    if (cfg.regime == CflRegime::H3) {
        const double h3 = norm_h3(u);
        if (h3 > 0.0) bound = cfg.contraction_L * dx / (K * h3);
    } else {
        if (wp == nullptr) throw ConfigError("cfl_dt: L2 regime needs a weight profile");
        const double np = norm_p(u, *wp);
        if (np > 0.0)
            bound = (7.0 * cfg.contraction_L / (8.0 * K)) * dx * std::sqrt(dx) / np;
        bound = std::min(bound, 1.0 / (4.0 * wp->c_R));
    }
    if (cfg.dt_cap) bound = std::min(bound, *cfg.dt_cap);
    if (!std::isfinite(bound))
        throw ConfigError("cfl_dt: zero state and no dt_cap leaves the step unbounded");
    return bound;
}

struct StepEvent {
    std::int64_t step_index;      // index of the step just taken (0-based)
    double t_after;
    const GridFunction& u_after;
    const GridFunction& u_half;   // (u^n + u^{n+1})/2 of the step just taken
    const StepStats& stats;
};

using StepObserver = std::function<void(const StepEvent&)>;

struct TimeStepPolicy {
    enum class Kind { Fixed, AdaptiveCfl };
    Kind kind = Kind::AdaptiveCfl;
    double dt = 0.0;

    static TimeStepPolicy fixed(double dt) { return {Kind::Fixed, dt}; }
    static TimeStepPolicy adaptive() { return {Kind::AdaptiveCfl, 0.0}; }
};

/**
 * Advances u^{n+1} = u^n - dt*G(u^{n+1/2}) - dt*D-DD+ u^{n+1/2} with
 * u^{n+1/2} = (u^n + u^{n+1})/2, solving the implicit step by the linear
 * fixed-point iteration
 *
 *   (I + dt/2 D-DD+) w^{l+1} = u^n - dt*G((u^n + w^l)/2) - dt/2 D-DD+ u^n,
 *   w^0 = u^n,
 *
 * one circulant solve per sweep. Owns its workspace, so repeated steps do not
 * allocate. A state is confined to one stepper; distinct steppers may run in
 * parallel.
 */
class CrankNicolsonStepper {
public:
    CrankNicolsonStepper(const Grid& grid, const StepperConfig& cfg,
                         const WeightProfile* weight = nullptr)
        : cfg_(cfg), weight_(weight), solver_(grid),
          base_(grid), mid_(grid), rhs_(grid), w_prev_(grid), w_next_(grid), u_half_(grid) {
        cfg_.validate();
    }

    const StepperConfig& config() const { return cfg_; }
    const WeightProfile* weight() const { return weight_; }

    /// One Crank-Nicolson step of size dt. Updates state in place and returns
    /// the step's stats (also recorded in state.last_stats).
    StepStats step(RunState& state, double dt) {
        if (!(dt > 0.0)) throw ConfigError("step: dt must be positive");
        if (!(state.u.grid == solver_.grid())) throw DimensionError("step: state on wrong grid");
        const GridFunction& u = state.u;
        const std::int64_t n = u.size();

        StepStats stats;
        stats.dt_used = dt;
        stats.l2_before = norm_l2(u);
        const double stop = cfg_.fp_tol * std::max(stats.l2_before, DBL_EPSILON);

        // base = u^n - dt/2 D-DD+ u^n, fixed across sweeps
        detail::d3_into(u, mid_, rhs_, w_next_);
        for (std::int64_t j = 0; j < n; ++j) base_[j] = u[j] - 0.5 * dt * w_next_[j];

        w_prev_.values = u.values;
        double prev_increment = 0.0;
        bool converged = false;
        for (int sweep = 1; sweep <= cfg_.fp_max_iter; ++sweep) {
            assemble_rhs(u, w_prev_, dt);
            const double res = solver_.solve_into(rhs_, dt, cfg_.lin_tol, w_next_);
            stats.lin_residual_max = std::max(stats.lin_residual_max, res);

            double acc = 0.0;
            for (std::int64_t j = 0; j < n; ++j) {
                const double d = w_next_[j] - w_prev_[j];
                acc += d * d;
            }
            const double increment = std::sqrt(u.grid.dx * acc);
            stats.fp_iterations = sweep;
            stats.final_increment_norm = increment;
            if (sweep >= 3 && prev_increment > 0.0)
                stats.max_increment_ratio =
                    std::max(stats.max_increment_ratio, increment / prev_increment);
            std::swap(w_prev_.values, w_next_.values);
            if (increment <= stop) {
                converged = true;
                break;
            }
            prev_increment = increment;
        }
        if (!converged)
            throw NonConvergence("fixed-point iteration did not reach tolerance (CFL violation?); "
                                 "last increment " + std::to_string(stats.final_increment_norm),
                                 stats.final_increment_norm, stats.fp_iterations);

        // accepted iterate is in w_prev_ after the final swap
        for (std::int64_t j = 0; j < n; ++j) u_half_[j] = 0.5 * (u[j] + w_prev_[j]);
        std::swap(state.u.values, w_prev_.values);
        stats.l2_after = norm_l2(state.u);

        const double drift = std::abs(stats.l2_after - stats.l2_before);
        if (drift > 10.0 * (cfg_.fp_tol + cfg_.lin_tol) * stats.l2_before)
            throw SolverFailure("discrete l2 conservation violated within a step: drift " +
                                    std::to_string(drift),
                                drift);

        state.t += dt;
        state.step_index += 1;
        state.last_stats = stats;
        return stats;
    }

    /// Midpoint (u^n + u^{n+1})/2 of the most recent step.
    const GridFunction& last_half_step() const { return u_half_; }

    /// Runs from u0 for `duration`, truncating the final step to land exactly.
    /// Observers fire after every accepted step, in registration order.
    RunState evolve(GridFunction u0, double duration, const TimeStepPolicy& policy,
                    const std::vector<StepObserver>& observers = {}) {
        if (duration < 0.0) throw ConfigError("evolve: negative duration");
        RunState state{std::move(u0), 0.0, 0, {}};
        if (duration == 0.0) return state;
        while (state.t < duration) {
            const double nominal = policy.kind == TimeStepPolicy::Kind::Fixed
                                       ? policy.dt
                                       : cfl_dt(state.u, cfg_, weight_);
            if (!(nominal > 0.0)) throw ConfigError("evolve: nonpositive time step");
            const double remaining = duration - state.t;
            // absorb sub-ulp accumulation leftovers into the final step
            const bool final_step = remaining <= nominal * (1.0 + 1e-9);
            const double dt = final_step ? remaining : nominal;
            try {
                step(state, dt);
            } catch (NonConvergence& e) {
                throw NonConvergence("step " + std::to_string(state.step_index) + " at t=" +
                                         std::to_string(state.t) + ": " + e.what(),
                                     e.last_increment_norm, e.iterations);
            }
            if (final_step) state.t = duration;
            for (const auto& obs : observers)
                obs(StepEvent{state.step_index - 1, state.t, state.u, u_half_, state.last_stats});
        }
        return state;
    }

private:
    // rhs = base - dt * G((u + w)/2)
    void assemble_rhs(const GridFunction& u, const GridFunction& w, double dt) {
        const std::int64_t n = u.size();
        for (std::int64_t j = 0; j < n; ++j) mid_[j] = 0.5 * (u[j] + w[j]);
        const double inv2h = 1.0 / (2.0 * u.grid.dx);
        auto g_at = [&](std::int64_t jm, std::int64_t j, std::int64_t jp) {
            const double tilde = (mid_[jp] + mid_[j] + mid_[jm]) / 3.0;
            return tilde * (mid_[jp] - mid_[jm]) * inv2h;
        };
        rhs_[0] = base_[0] - dt * g_at(n - 1, 0, 1);
        for (std::int64_t j = 1; j + 1 < n; ++j) rhs_[j] = base_[j] - dt * g_at(j - 1, j, j + 1);
        rhs_[n - 1] = base_[n - 1] - dt * g_at(n - 2, n - 1, 0);
    }

    StepperConfig cfg_;
    const WeightProfile* weight_;
    CirculantThirdDiffSolver solver_;
    GridFunction base_, mid_, rhs_, w_prev_, w_next_, u_half_;
};

/// Single-step convenience wrapper with a throwaway workspace.
inline std::pair<RunState, StepStats> cn_step(RunState state, double dt, const StepperConfig& cfg) {
    CrankNicolsonStepper stepper(state.u.grid, cfg);
    StepStats stats = stepper.step(state, dt);
    return {std::move(state), stats};
}

} // namespace kdvcn
