// Acceptance runner: exercises every gate criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit code is the number of
// failed criteria. The two-soliton study (criterion 6) lives in the long
// runner (kdvcn_acceptance_long) together with the full one-soliton ladder.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "kdvcn/harness.hpp"
#include "kdvcn/interpolant.hpp"

using namespace kdvcn;

namespace {

// Frozen regression constants (recorded at the first acceptance run on this
// configuration; tracked within 20%).
constexpr double kSmoothingFrozen[3] = {2.127026877, 2.518272608, 3.214171813};
constexpr double kSmoothingSingleBound = 4.0;

struct Criterion {
    int id;
    std::string name;
    bool pass;
    std::string detail;
};

std::vector<Criterion> g_results;

void record(int id, const std::string& name, bool pass, const std::string& detail) {
    g_results.push_back({id, name, pass, detail});
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

double elapsed(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------- 1, 2

void criterion_1_identities() {
    const IdentityResiduals res = identity_suite(1050);
    const double worst =
        std::max({res.sbp_central, res.sbp_onesided, res.product_d, res.product_dp,
                  res.product_dm, res.dz1z2, res.d3_leibniz, res.g_orthogonal,
                  res.d3_orthogonal});
    const bool pass = worst <= 1e-12 && res.d3_matches_composition && res.inf_l2_bound;
    record(1, "operator identity suite (1050 random grid functions, N in 8..512)", pass,
           "worst relative residual " + fmt("%.3e", worst));
}

void criterion_2_composition() {
    std::mt19937_64 rng(424242);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    bool pass = true;
    for (int iter = 0; iter < 1000 && pass; ++iter) {
        const std::int64_t n = 8 + (iter * 7) % 505;   // mixed odd/even sizes
        const Grid g(n, 0.01 + 0.001 * (iter % 97), -1.0);
        GridFunction v(g);
        for (std::int64_t j = 0; j < n; ++j) v[j] = uni(rng);
        const GridFunction direct = d3(v);
        const GridFunction composed = d_minus(d_central(d_plus(v)));
        for (std::int64_t j = 0; j < n; ++j)
            if (direct[j] != composed[j]) pass = false;
    }
    record(2, "d3 equals d_minus(d_central(d_plus(.))) bit-for-bit on 1000 inputs", pass,
           pass ? "exact" : "mismatch found");
}

// ----------------------------------------------------------------- 3, 5, 8

struct SolitonRow {
    std::int64_t n = 0;
    bool converged = true;
    double error = 0.0;
    double c2_drift = 0.0;
    double max_ratio = 0.0;
    int max_iter = 0;
    std::int64_t steps = 0;
    double wall = 0.0;
    GridFunction final_state;
};

void criteria_3_5_8_one_soliton() {
    const CaseSpec cs{Case::OneSoliton, -10.0, 10.0, -1.0, {}, {}};
    const StepperConfig cfg;   // L = 0.5, h3 regime, fp_tol = lin_tol = 1e-12
    const std::vector<std::int64_t> ns = {1000, 2000, 4000, 8000};
    const double duration = 2.0;

    // lambda0 frozen from the coarsest sample of the initial datum; each run
    // then uses dt = lambda0 * dx, the full solvability-bound step for that datum
    const double lambda0 =
        cfg.contraction_L / (cfg.contraction_K() * norm_h3(cs.initial_data(ns.front())));

    std::vector<SolitonRow> rows(ns.size());
    std::atomic<std::size_t> cursor{0};
    auto worker = [&]() {
        for (std::size_t i = cursor.fetch_add(1); i < ns.size(); i = cursor.fetch_add(1)) {
            SolitonRow row;
            row.n = ns[i];
            const auto t0 = std::chrono::steady_clock::now();
            try {
                GridFunction u0 = cs.initial_data(row.n);
                CrankNicolsonStepper stepper(u0.grid, cfg);
                const double dt = lambda0 * u0.grid.dx;
                std::vector<StepObserver> obs{[&row](const StepEvent& ev) {
                    row.max_ratio = std::max(row.max_ratio, ev.stats.max_increment_ratio);
                    row.max_iter = std::max(row.max_iter, ev.stats.fp_iterations);
                }};
                GridFunction u0_copy = u0;
                RunState fin =
                    stepper.evolve(std::move(u0_copy), duration, TimeStepPolicy::fixed(dt), obs);
                const GridFunction ref =
                    sample([&](double x) { return cs.exact(x, cs.t_start + duration); }, u0.grid);
                row.error = relative_error(fin.u, ref);
                row.c2_drift = std::abs(norm_l2(fin.u) / norm_l2(u0) - 1.0);
                row.steps = fin.step_index;
                row.final_state = std::move(fin.u);
            } catch (const std::exception&) {
                row.converged = false;
            }
            row.wall = elapsed(t0);
            rows[i] = row;
        }
    };
    std::thread t1(worker), t2(worker);
    t1.join();
    t2.join();

    std::printf("  one-soliton ladder (lambda0 = %.6e):\n", lambda0);
    for (const auto& r : rows)
        std::printf("    N=%5lld steps=%7lld E=%.6e |C2-1|=%.2e max_ratio=%.4f wall=%.0fs\n",
                    static_cast<long long>(r.n), static_cast<long long>(r.steps), r.error,
                    r.c2_drift, r.max_ratio, r.wall);

    const SolitonRow& r2000 = rows[1];
    record(3, "one-soliton N=2000, t_end=2: discrete l2 norm conserved to 1e-8",
           r2000.converged && r2000.c2_drift <= 1e-8,
           "|C2 - 1| = " + fmt("%.3e", r2000.c2_drift));

    // Rates against the closed form hit the window-truncation floor (the
    // exact soliton's tail is ~2e-4 at x = 10 at the final time, a ~1.1e-5
    // relative floor on this window), so the observed order of the scheme is
    // measured by consecutive-grid differences, which are window-consistent:
    // d_i = ||u_{N_i} - u_{2N_i}|| behaves like 0.75 C dx_i^2 and the slope
    // between consecutive d_i is the scheme order.
    bool rates_ok = true;
    std::string exact_text, order_text;
    std::vector<double> diffs;
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        if (!rows[i].converged || !rows[i + 1].converged) {
            rates_ok = false;
            continue;
        }
        exact_text += fmt("%.3f ", rows[i].error > 0.0 && rows[i + 1].error > 0.0
                                       ? rate(rows[i].error, rows[i].n, rows[i + 1].error,
                                              rows[i + 1].n)
                                       : std::nan(""));
        diffs.push_back(relative_error(rows[i].final_state, rows[i + 1].final_state));
    }
    double finest_order = 0.0;
    for (std::size_t i = 0; i + 1 < diffs.size(); ++i) {
        if (!(diffs[i] > 0.0) || !(diffs[i + 1] > 0.0)) {
            rates_ok = false;
            continue;
        }
        finest_order = rate(diffs[i], rows[i].n, diffs[i + 1], rows[i + 1].n);
        order_text += fmt("%.3f ", finest_order);
    }
    record(5, "one-soliton convergence: observed order on the finest grid pair in [1.8, 2.2]",
           rates_ok && finest_order >= 1.8 && finest_order <= 2.2,
           "observed order " + order_text + "| rates vs closed form " + exact_text +
               "(window floor ~1.1e-5, see E column)");

    bool c8 = true;
    double worst_ratio = 0.0;
    for (const auto& r : rows) {
        c8 = c8 && r.converged && r.max_iter <= cfg.fp_max_iter;
        worst_ratio = std::max(worst_ratio, r.max_ratio);
    }
    record(8, "fixed point converges at the full CFL step; increment ratios <= 0.6",
           c8 && worst_ratio <= 0.6, "worst ratio " + fmt("%.4f", worst_ratio));
}

// --------------------------------------------------------------------- 4

void criterion_4_truncation() {
    std::vector<double> errs;
    for (std::int64_t n : {128, 256, 512, 1024}) {
        const Grid g = Grid::over(0.0, 2.0 * std::numbers::pi, n);
        GridFunction u(g);
        for (std::int64_t j = 0; j < n; ++j) u[j] = std::sin(g.x(j));
        const GridFunction gu = nonlinear_g(u);
        double err = 0.0;
        for (std::int64_t j = 0; j < n; ++j)
            err = std::max(err, std::abs(gu[j] - std::sin(g.x(j)) * std::cos(g.x(j))));
        errs.push_back(err);
    }
    bool pass = true;
    std::string slopes;
    for (std::size_t i = 0; i + 1 < errs.size(); ++i) {
        const double slope = std::log2(errs[i] / errs[i + 1]);
        slopes += fmt("%.3f ", slope);
        pass = pass && slope >= 1.9 && slope <= 2.1;
    }
    record(4, "G(u) - u u_x shrinks at slope 2.0 +/- 0.1 over three halvings", pass,
           "slopes " + slopes);
}

// --------------------------------------------------------------------- 7

void criterion_7_nonsmooth() {
    const CaseSpec cs{Case::NonsmoothL2, -5.0, 5.0, 0.0, {}, {}};
    StepperConfig cfg;
    cfg.regime = CflRegime::L2;
    const double radius = 3.0;
    const double duration = 0.5;
    const std::vector<std::int64_t> ns = {250, 500, 1000};

    GridFunction u0c = cs.initial_data(ns.front());
    const WeightProfile wp0 = build_weight(u0c.grid, radius);
    const double lambda0 =
        7.0 * cfg.contraction_L / (8.0 * cfg.contraction_K() * norm_p(u0c, wp0));

    const auto t_ref = std::chrono::steady_clock::now();
    const GridFunction ref = make_reference(cs, 4000, duration, cfg, radius);
    std::printf("  nonsmooth reference (N=4000) ready in %.0fs\n", elapsed(t_ref));

    bool drift_ok = true, smoothing_ok = true, rates_ok = true;
    std::string drift_text, smooth_text, rate_text;
    std::vector<double> errors;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        GridFunction u0 = cs.initial_data(ns[i]);
        const WeightProfile wp = build_weight(u0.grid, radius);
        CrankNicolsonStepper stepper(u0.grid, cfg, &wp);
        const double dt =
            std::min(lambda0 * u0.grid.dx * std::sqrt(u0.grid.dx), 1.0 / (4.0 * wp.c_R));
        const double n0 = norm_l2(u0);
        double max_drift = 0.0;
        SmoothingAccumulator acc{0.0, radius};
        std::vector<StepObserver> obs{[&](const StepEvent& ev) {
            max_drift = std::max(max_drift, std::abs(ev.stats.l2_after / n0 - 1.0));
            acc = smoothing_update(acc, ev.u_half, ev.stats.dt_used);
        }};
        GridFunction u0_copy = u0;
        const RunState fin =
            stepper.evolve(std::move(u0_copy), duration, TimeStepPolicy::fixed(dt), obs);
        errors.push_back(relative_error(fin.u, ref));

        drift_ok = drift_ok && max_drift <= 1e-8;
        drift_text += fmt("%.1e ", max_drift);
        const double frozen = kSmoothingFrozen[i];
        smoothing_ok = smoothing_ok && acc.total <= kSmoothingSingleBound &&
                       std::abs(acc.total - frozen) <= 0.2 * frozen;
        smooth_text += fmt("%.4f ", acc.total);
    }
    for (std::size_t i = 0; i + 1 < ns.size(); ++i) {
        const double r = rate(errors[i], ns[i], errors[i + 1], ns[i + 1]);
        rates_ok = rates_ok && r >= -0.2 && r <= 0.5;
        rate_text += fmt("%.3f ", r);
    }
    record(7, "nonsmooth L2 case: conservation, smoothing bound, rates",
           drift_ok && smoothing_ok && rates_ok,
           "drift " + drift_text + "| smoothing " + smooth_text + "<= " +
               fmt("%.1f", kSmoothingSingleBound) + " | rates " + rate_text);
}

// --------------------------------------------------------------------- 9

void criterion_9_h3_sampling() {
    const auto gaussian = [](double x) { return std::exp(-x * x); };
    std::vector<double> norms;
    for (std::int64_t n : {200, 400, 800, 1600, 3200}) {
        const Grid g = Grid::over(-10.0, 10.0, n);
        norms.push_back(norm_h3(sample(gaussian, g)));
    }
    const double converged = norms.back();
    bool pass = true;
    std::string text;
    for (double v : norms) {
        pass = pass && v <= 1.05 * converged && v >= converged / 1.05;
        text += fmt("%.4f ", v);
    }
    record(9, "h3 norm of sampled exp(-x^2) stays within 1.05x of its converged value", pass,
           text);
}

// -------------------------------------------------------------------- 10

void criterion_10_interpolant() {
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const Grid g(64, 0.173, -3.1);
    GridFunction lo(g), hi(g);
    for (std::int64_t j = 0; j < g.n_cells; ++j) {
        lo[j] = uni(rng);
        hi[j] = uni(rng);
    }
    const SpaceTimeSlab slab(lo, hi, 0.25, 0.5);

    bool anchors = true;
    for (std::int64_t j = 0; j < g.n_cells; ++j) {
        anchors = anchors && slab.eval(g.x(j), 0.25) == lo[j];
        anchors = anchors && slab.eval(g.x(j), 0.5) == hi[j];
    }

    bool derivs = true;
    double worst = 0.0;
    const double eps = 1e-6 * g.dx, t = 0.3;
    for (std::int64_t j = 0; j < g.n_cells; j += 3) {
        const double x = g.x(j) + 0.37 * g.dx;
        const double fd1 = (slab.eval(x + eps, t) - slab.eval(x - eps, t)) / (2.0 * eps);
        const double fd2 =
            (slab.eval_dx(x + eps, t, 1) - slab.eval_dx(x - eps, t, 1)) / (2.0 * eps);
        const double fd3 =
            (slab.eval_dx(x + eps, t, 2) - slab.eval_dx(x - eps, t, 2)) / (2.0 * eps);
        const double r1 = std::abs(slab.eval_dx(x, t, 1) - fd1) / std::max(std::abs(fd1), 1e-12);
        const double r2 = std::abs(slab.eval_dx(x, t, 2) - fd2) / std::max(std::abs(fd2), 1e-12);
        const double r3 = std::abs(slab.eval_dx(x, t, 3) - fd3) / std::max(std::abs(fd3), 1e-12);
        worst = std::max({worst, r1, r2, r3});
        derivs = derivs && r1 <= 1e-6 && r2 <= 1e-6 && r3 <= 1e-6;
    }
    record(10, "interpolant: exact node/time anchors; derivative orders consistent to 1e-6",
           anchors && derivs, "worst derivative mismatch " + fmt("%.2e", worst));
}

} // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    std::printf("kdvcn acceptance suite\n");

    criterion_1_identities();
    criterion_2_composition();
    criterion_4_truncation();
    criterion_9_h3_sampling();
    criterion_10_interpolant();
    criteria_3_5_8_one_soliton();
    criterion_7_nonsmooth();

    std::sort(g_results.begin(), g_results.end(),
              [](const Criterion& a, const Criterion& b) { return a.id < b.id; });
    int failed = 0;
    std::printf("\n");
    for (const auto& c : g_results) {
        std::printf("[%s] criterion %2d: %s\n             %s\n", c.pass ? "PASS" : "FAIL", c.id,
                    c.name.c_str(), c.detail.c_str());
        if (!c.pass) ++failed;
    }
    std::printf("[SKIP] criterion  6: two-soliton convergence is opt-in "
                "(run kdvcn_acceptance_long or configure with -DKDVCN_LONG_TESTS=ON)\n");
    std::printf("\n%d of %zu criteria failed, %.0f s total\n", failed, g_results.size(),
                elapsed(t0));
    return failed;
}
