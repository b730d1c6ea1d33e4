#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "kdvcn/config.hpp"
#include "kdvcn/diagnostics.hpp"
#include "kdvcn/grid.hpp"
#include "kdvcn/io.hpp"
#include "kdvcn/operators.hpp"
#include "kdvcn/reference.hpp"
#include "kdvcn/stepper.hpp"
#include "kdvcn/weight.hpp"

namespace kdvcn {

enum class ReferenceKind { Exact, FineGrid };

/// Declarative description of a convergence study.
struct ExperimentSpec {
    CaseSpec scenario;
    std::vector<std::int64_t> n_list;
    double t_end = 2.0;               // run duration; compared against solution time t_start + t_end
    ReferenceKind reference = ReferenceKind::Exact;
    std::int64_t n_fine = 0;          // FineGrid only
    double weight_radius = 5.0;
    StepperConfig stepper;
    bool adaptive_dt = false;         // per-step CFL instead of the frozen study step
    int jobs = 1;
    std::string output_path;

    bool operator==(const ExperimentSpec&) const = default;

    void validate() const {
        stepper.validate();
        if (n_list.empty()) throw ConfigError("ExperimentSpec: empty n_list");
        for (std::size_t i = 0; i + 1 < n_list.size(); ++i)
            if (n_list[i] >= n_list[i + 1])
                throw ConfigError("ExperimentSpec: n_list must be strictly increasing");
        if (!(t_end > 0.0)) throw ConfigError("ExperimentSpec: t_end must be positive");
        if (!(t_end > scenario.t_start))
            throw ConfigError("ExperimentSpec: t_end must exceed t_start");
        if (reference == ReferenceKind::FineGrid) {
            if (n_fine <= 0) throw ConfigError("ExperimentSpec: fine_grid reference needs n_fine");
            for (std::int64_t n : n_list)
                if (n_fine % n != 0)
                    throw ConfigError("ExperimentSpec: n_fine must be a multiple of every N");
        }
        if (reference == ReferenceKind::Exact && !scenario.has_exact())
            throw ConfigError("ExperimentSpec: case has no exact solution; use fine_grid");
        if (jobs < 1) throw ConfigError("ExperimentSpec: jobs must be >= 1");
    }
};

/// Case defaults mirroring the three built-in experiments.
inline ExperimentSpec default_spec(Case kind) {
    ExperimentSpec spec;
    spec.scenario.kind = kind;
    switch (kind) {
        case Case::OneSoliton:
            spec.scenario = {kind, -10.0, 10.0, -1.0, {}, {}};
            spec.n_list = {2000, 4000, 8000, 16000, 32000};
            spec.t_end = 2.0;
            spec.reference = ReferenceKind::Exact;
            spec.weight_radius = 5.0;
            spec.stepper.regime = CflRegime::H3;
            break;
        case Case::TwoSoliton:
            spec.scenario = {kind, -40.0, 40.0, -10.0, {0.5, 1.0}, {}};
            spec.n_list = {500, 1000, 2000, 4000, 8000};
            spec.t_end = 20.0;
            spec.reference = ReferenceKind::Exact;
            spec.weight_radius = 5.0;
            spec.stepper.regime = CflRegime::H3;
            break;
        case Case::NonsmoothL2:
            spec.scenario = {kind, -5.0, 5.0, 0.0, {}, {}};
            spec.n_list = {250, 500, 1000, 2000, 4000, 8000};
            spec.t_end = 0.5;
            spec.reference = ReferenceKind::FineGrid;
            spec.n_fine = 32000;
            spec.weight_radius = 3.0;
            spec.stepper.regime = CflRegime::L2;
            break;
        case Case::CustomFile:
            spec.scenario = {kind, -10.0, 10.0, 0.0, {}, {}};
            spec.n_list = {};
            spec.t_end = 1.0;
            spec.reference = ReferenceKind::FineGrid;
            spec.weight_radius = 5.0;
            spec.stepper.regime = CflRegime::H3;
            break;
    }
    return spec;
}

struct ReportRow {
    std::int64_t n = 0;
    bool failed = false;
    std::string failure;
    double error = 0.0;
    ConservationRecord conservation;
    std::optional<double> rate_to_next;
};

struct ErrorReport {
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<ReportRow> rows;
};

// ---------------------------------------------------------------------------
// config binding
// ---------------------------------------------------------------------------

namespace detail {

inline Case parse_case(std::string s) {
    std::replace(s.begin(), s.end(), '-', '_');
    if (s == "one_soliton") return Case::OneSoliton;
    if (s == "two_soliton") return Case::TwoSoliton;
    if (s == "nonsmooth_l2") return Case::NonsmoothL2;
    if (s == "custom_file") return Case::CustomFile;
    throw ConfigError("unknown case '" + s + "'");
}

inline double parse_double(const std::string& v, const std::string& key) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("key '" + key + "': cannot parse number from '" + v + "'");
    return x;
}

inline std::int64_t parse_int(const std::string& v, const std::string& key) {
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("key '" + key + "': cannot parse integer from '" + v + "'");
    return x;
}

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key '" + key + "': cannot parse boolean from '" + v + "'");
}

inline std::vector<std::int64_t> parse_int_list(const std::string& v, const std::string& key) {
    std::vector<std::int64_t> out;
    std::string token;
    std::istringstream in(v);
    while (std::getline(in, token, ','))
        if (!trim(token).empty()) out.push_back(parse_int(trim(token), key));
    return out;
}

inline std::string int_list_to_string(const std::vector<std::int64_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(v[i]);
    }
    return s;
}

} // namespace detail

inline ConfigDoc to_config(const ExperimentSpec& spec) {
    ConfigDoc doc;
    auto& exp = doc.section("experiment");
    exp.emplace_back("case", case_name(spec.scenario.kind));
    exp.emplace_back("x_left", format_g17(spec.scenario.x_left));
    exp.emplace_back("x_right", format_g17(spec.scenario.x_right));
    exp.emplace_back("t_start", format_g17(spec.scenario.t_start));
    exp.emplace_back("t_end", format_g17(spec.t_end));
    exp.emplace_back("n_list", detail::int_list_to_string(spec.n_list));
    exp.emplace_back("soliton_a", format_g17(spec.scenario.soliton.a));
    exp.emplace_back("soliton_b", format_g17(spec.scenario.soliton.b));
    exp.emplace_back("weight_radius", format_g17(spec.weight_radius));
    exp.emplace_back("reference", spec.reference == ReferenceKind::Exact ? "exact" : "fine_grid");
    if (spec.reference == ReferenceKind::FineGrid)
        exp.emplace_back("n_fine", std::to_string(spec.n_fine));
    if (!spec.scenario.initial_file.empty())
        exp.emplace_back("initial_file", spec.scenario.initial_file);
    exp.emplace_back("adaptive_dt", spec.adaptive_dt ? "true" : "false");
    exp.emplace_back("jobs", std::to_string(spec.jobs));
    if (!spec.output_path.empty()) exp.emplace_back("output_path", spec.output_path);

    auto& st = doc.section("stepper");
    st.emplace_back("regime", spec.stepper.regime == CflRegime::H3 ? "h3" : "l2");
    st.emplace_back("L", format_g17(spec.stepper.contraction_L));
    st.emplace_back("fp_tol", format_g17(spec.stepper.fp_tol));
    st.emplace_back("fp_max_iter", std::to_string(spec.stepper.fp_max_iter));
    st.emplace_back("lin_tol", format_g17(spec.stepper.lin_tol));
    if (spec.stepper.dt_cap) st.emplace_back("dt_cap", format_g17(*spec.stepper.dt_cap));
    return doc;
}

inline ExperimentSpec from_config(const ConfigDoc& doc) {
    const auto* exp = doc.find_section("experiment");
    if (exp == nullptr) throw ConfigError("config: missing [experiment] section");

    // the case key seeds the defaults; everything else overrides
    Case kind = Case::OneSoliton;
    bool have_case = false;
    for (const auto& [k, v] : *exp)
        if (k == "case") {
            kind = detail::parse_case(v);
            have_case = true;
        }
    if (!have_case) throw ConfigError("config: [experiment] needs a 'case' key");
    ExperimentSpec spec = default_spec(kind);

    for (const auto& [k, v] : *exp) {
        if (k == "case") continue;
        else if (k == "x_left") spec.scenario.x_left = detail::parse_double(v, k);
        else if (k == "x_right") spec.scenario.x_right = detail::parse_double(v, k);
        else if (k == "t_start") spec.scenario.t_start = detail::parse_double(v, k);
        else if (k == "t_end") spec.t_end = detail::parse_double(v, k);
        else if (k == "n_list") spec.n_list = detail::parse_int_list(v, k);
        else if (k == "soliton_a") spec.scenario.soliton.a = detail::parse_double(v, k);
        else if (k == "soliton_b") spec.scenario.soliton.b = detail::parse_double(v, k);
        else if (k == "weight_radius") spec.weight_radius = detail::parse_double(v, k);
        else if (k == "reference") {
            if (v == "exact") spec.reference = ReferenceKind::Exact;
            else if (v == "fine_grid") spec.reference = ReferenceKind::FineGrid;
            else throw ConfigError("key 'reference': expected exact|fine_grid, got '" + v + "'");
        }
        else if (k == "n_fine") spec.n_fine = detail::parse_int(v, k);
        else if (k == "initial_file") spec.scenario.initial_file = v;
        else if (k == "adaptive_dt") spec.adaptive_dt = detail::parse_bool(v, k);
        else if (k == "jobs") spec.jobs = static_cast<int>(detail::parse_int(v, k));
        else if (k == "output_path") spec.output_path = v;
        else throw ConfigError("config: unknown key '" + k + "' in [experiment]");
    }

    if (const auto* st = doc.find_section("stepper")) {
        for (const auto& [k, v] : *st) {
            if (k == "regime") {
                if (v == "h3") spec.stepper.regime = CflRegime::H3;
                else if (v == "l2") spec.stepper.regime = CflRegime::L2;
                else throw ConfigError("key 'regime': expected h3|l2, got '" + v + "'");
            }
            else if (k == "L") spec.stepper.contraction_L = detail::parse_double(v, k);
            else if (k == "fp_tol") spec.stepper.fp_tol = detail::parse_double(v, k);
            else if (k == "fp_max_iter") spec.stepper.fp_max_iter = static_cast<int>(detail::parse_int(v, k));
            else if (k == "lin_tol") spec.stepper.lin_tol = detail::parse_double(v, k);
            else if (k == "dt_cap") spec.stepper.dt_cap = detail::parse_double(v, k);
            else throw ConfigError("config: unknown key '" + k + "' in [stepper]");
        }
    }
    for (const auto& [name, entries] : doc.sections) {
        (void)entries;
        if (name != "experiment" && name != "stepper")
            throw ConfigError("config: unknown section [" + name + "]");
    }
    return spec;
}

// ---------------------------------------------------------------------------
// study driver
// ---------------------------------------------------------------------------

namespace detail {

/// Frozen study step for one row: dt = lambda0 * dx (h3) or
/// min(lambda0 * dx^{3/2}, 1/(4 c_R)) (l2), honoring dt_cap.
inline double frozen_row_dt(double lambda0, const Grid& grid, const StepperConfig& cfg,
                            const WeightProfile& wp) {
    double dt = cfg.regime == CflRegime::H3 ? lambda0 * grid.dx
                                            : lambda0 * grid.dx * std::sqrt(grid.dx);
    if (cfg.regime == CflRegime::L2) dt = std::min(dt, 1.0 / (4.0 * wp.c_R));
    if (cfg.dt_cap) dt = std::min(dt, *cfg.dt_cap);
    return dt;
}

/// lambda0 from the initial datum sampled on the coarsest study grid. The
/// coarse sample tracks the infinite-line h3 norm of the datum; on finer
/// periodic grids the window-truncation mismatch at the seam inflates the
/// third difference like dx^{-5/2} and would drive the step to zero.
inline double frozen_lambda0(const ExperimentSpec& spec) {
    const GridFunction u0 = spec.scenario.initial_data(spec.n_list.front());
    const double K = spec.stepper.contraction_K();
    if (spec.stepper.regime == CflRegime::H3) {
        const double h3 = norm_h3(u0);
        if (!(h3 > 0.0)) throw ConfigError("study: zero initial data in h3 regime");
        return spec.stepper.contraction_L / (K * h3);
    }
    const WeightProfile wp = build_weight(u0.grid, spec.weight_radius);
    const double np = norm_p(u0, wp);
    if (!(np > 0.0)) throw ConfigError("study: zero initial data in l2 regime");
    return 7.0 * spec.stepper.contraction_L / (8.0 * K * np);
}

} // namespace detail

/// Runs a single study row. Returns the final state along with the row record.
inline ReportRow run_study_row(const ExperimentSpec& spec, std::int64_t n, double lambda0,
                               const GridFunction* fine_ref) {
    ReportRow row;
    row.n = n;
    try {
        GridFunction u0 = spec.scenario.initial_data(n);
        const WeightProfile wp = build_weight(u0.grid, spec.weight_radius);
        CrankNicolsonStepper stepper(u0.grid, spec.stepper, &wp);
        const TimeStepPolicy policy =
            spec.adaptive_dt
                ? TimeStepPolicy::adaptive()
                : TimeStepPolicy::fixed(detail::frozen_row_dt(lambda0, u0.grid, spec.stepper, wp));
        GridFunction u0_copy = u0;
        const RunState final = stepper.evolve(std::move(u0_copy), spec.t_end, policy);

        if (spec.reference == ReferenceKind::Exact) {
            const double ts = spec.scenario.t_start + spec.t_end;
            const GridFunction ref =
                sample([&](double x) { return spec.scenario.exact(x, ts); }, u0.grid);
            row.error = relative_error(final.u, ref);
        } else {
            row.error = relative_error(final.u, *fine_ref);
        }
        row.conservation = conserved(final.u, u0, spec.t_end);
    } catch (const std::exception& e) {
        row.failed = true;
        row.failure = e.what();
    }
    return row;
}

/**
 * The convergence experiment: one run per N in n_list against the configured
 * reference, conservation ratios against the initial datum, and log-log rates
 * between consecutive rows. Rows run on a bounded worker pool (spec.jobs); the
 * report is assembled in N order afterwards, so its bytes do not depend on the
 * worker count.
 */
inline ErrorReport run_convergence_study(const ExperimentSpec& spec, std::ostream* log = nullptr) {
    spec.validate();
    const auto t_begin = std::chrono::steady_clock::now();

    const double lambda0 = spec.adaptive_dt ? 0.0 : detail::frozen_lambda0(spec);

    std::optional<GridFunction> fine_ref;
    if (spec.reference == ReferenceKind::FineGrid)
        fine_ref = make_reference(spec.scenario, spec.n_fine, spec.t_end, spec.stepper,
                                  spec.weight_radius);

    std::vector<ReportRow> rows(spec.n_list.size());
    std::atomic<std::size_t> cursor{0};
    auto worker = [&]() {
        for (std::size_t i = cursor.fetch_add(1); i < rows.size(); i = cursor.fetch_add(1)) {
            rows[i] = run_study_row(spec, spec.n_list[i], lambda0,
                                    fine_ref ? &*fine_ref : nullptr);
        }
    };
    const int nworkers = std::min<int>(spec.jobs, static_cast<int>(rows.size()));
    if (nworkers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < nworkers; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        if (!rows[i].failed && !rows[i + 1].failed && rows[i].error > 0.0 &&
            rows[i + 1].error > 0.0)
            rows[i].rate_to_next = rate(rows[i].error, rows[i].n, rows[i + 1].error, rows[i + 1].n);
    }

    ErrorReport report;
    report.rows = std::move(rows);
    // hash the experiment identity, not the execution policy
    ExperimentSpec canon = spec;
    canon.jobs = 1;
    canon.output_path.clear();
    const ConfigDoc doc = to_config(canon);
    report.metadata = {
        {"case", case_name(spec.scenario.kind)},
        {"x_left", format_g17(spec.scenario.x_left)},
        {"x_right", format_g17(spec.scenario.x_right)},
        {"t_start", format_g17(spec.scenario.t_start)},
        {"t_end", format_g17(spec.t_end)},
        {"regime", spec.stepper.regime == CflRegime::H3 ? "h3" : "l2"},
        {"lambda0", spec.adaptive_dt ? std::string("adaptive") : format_g17(lambda0)},
        {"reference", spec.reference == ReferenceKind::Exact
                          ? std::string("exact")
                          : "fine_grid(" + std::to_string(spec.n_fine) + ")"},
        {"config", fnv1a64_hex(emit_config(doc))},
    };

    if (log != nullptr) {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
        *log << "study " << case_name(spec.scenario.kind) << " finished in " << secs << " s\n";
    }
    return report;
}

inline std::string report_csv(const ErrorReport& report) {
    std::ostringstream out;
    for (const auto& [k, v] : report.metadata) out << "# " << k << " = " << v << "\n";
    out << "N,E,C1,C2,C3,R_E\n";
    const auto opt = [](const std::optional<double>& v) {
        return v ? format_g17(*v) : std::string();
    };
    for (const auto& row : report.rows) {
        if (row.failed) {
            out << "# row N=" << row.n << " failed: " << row.failure << "\n";
            continue;
        }
        out << row.n << ',' << format_g17(row.error) << ',' << opt(row.conservation.c1) << ','
            << opt(row.conservation.c2) << ',' << opt(row.conservation.c3) << ','
            << opt(row.rate_to_next) << "\n";
    }
    return out.str();
}

inline void write_report(const ErrorReport& report, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp);
        if (!f) throw ConfigError("write_report: cannot open " + tmp.string());
        f << report_csv(report);
    }
    std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// operator identity suite (shared by `selftest` and the acceptance runner)
// ---------------------------------------------------------------------------

struct IdentityResiduals {
    double sbp_central = 0.0;     // <v,Dw> + <Dv,w>
    double sbp_onesided = 0.0;    // <v,D+w> + <D-v,w>
    double product_d = 0.0;       // D(vw) = bar(v)Dw + bar(w)Dv
    double product_dp = 0.0;      // D+(vw) = S+v D+w + w D+v
    double product_dm = 0.0;      // D-(vw) = S-v D-w + w D-v
    double dz1z2 = 0.0;           // <D(vw),w> = dx/2 <D+v Dw, w> + 1/2 <S-w Dv, w>
    double d3_leibniz = 0.0;      // exact third-difference product expansion
    double g_orthogonal = 0.0;    // <G(u),u> = 0
    double d3_orthogonal = 0.0;   // <D-DD+u,u> = 0
    bool d3_matches_composition = true;
    bool inf_l2_bound = true;     // ||v||_inf <= dx^{-1/2} ||v||
};

/// Worst relative residuals over `n_vectors` random grid functions with sizes
/// in {8,...,512}. Deterministic for a fixed seed.
inline IdentityResiduals identity_suite(int n_vectors, std::uint64_t seed = 20240211) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    IdentityResiduals worst;
    const auto track = [](double& slot, double err, double scale) {
        if (scale > 0.0) slot = std::max(slot, err / scale);
    };

    for (int iter = 0; iter < n_vectors; ++iter) {
        const std::int64_t n = 8 << (iter % 7);        // 8..512
        const double dx = 0.02 + 0.5 * (uni(rng) + 1.0);
        const Grid grid(n, dx, -0.5 * dx * static_cast<double>(n));
        GridFunction v(grid), w(grid);
        const double amp = std::exp(uni(rng));
        for (std::int64_t j = 0; j < n; ++j) {
            v[j] = amp * uni(rng);
            w[j] = amp * uni(rng);
        }

        const GridFunction dv = d_central(v), dw = d_central(w);
        const GridFunction dpv = d_plus(v), dpw = d_plus(w);
        const GridFunction dmv = d_minus(v), dmw = d_minus(w);
        const GridFunction d3v = d3(v), d3w = d3(w);
        const GridFunction bv = bar_avg(v), bw = bar_avg(w);

        track(worst.sbp_central, std::abs(inner(v, dw) + inner(dv, w)),
              std::abs(inner(v, dw)) + std::abs(inner(dv, w)));
        track(worst.sbp_onesided, std::abs(inner(v, dpw) + inner(dmv, w)),
              std::abs(inner(v, dpw)) + std::abs(inner(dmv, w)));

        GridFunction vw(grid);
        for (std::int64_t j = 0; j < n; ++j) vw[j] = v[j] * w[j];
        {
            const GridFunction lhs = d_central(vw);
            double err = 0.0, scale = 0.0;
            for (std::int64_t j = 0; j < n; ++j) {
                const double r = bv[j] * dw[j] + bw[j] * dv[j];
                err = std::max(err, std::abs(lhs[j] - r));
                scale = std::max(scale, std::abs(lhs[j]) + std::abs(r));
            }
            track(worst.product_d, err, scale);
        }
        {
            const GridFunction lhs = d_plus(vw);
            const GridFunction spv = shift(v, 1);
            double err = 0.0, scale = 0.0;
            for (std::int64_t j = 0; j < n; ++j) {
                const double r = spv[j] * dpw[j] + w[j] * dpv[j];
                err = std::max(err, std::abs(lhs[j] - r));
                scale = std::max(scale, std::abs(lhs[j]) + std::abs(r));
            }
            track(worst.product_dp, err, scale);
        }
        {
            const GridFunction lhs = d_minus(vw);
            const GridFunction smv = shift(v, -1);
            double err = 0.0, scale = 0.0;
            for (std::int64_t j = 0; j < n; ++j) {
                const double r = smv[j] * dmw[j] + w[j] * dmv[j];
                err = std::max(err, std::abs(lhs[j] - r));
                scale = std::max(scale, std::abs(lhs[j]) + std::abs(r));
            }
            track(worst.product_dm, err, scale);
        }
        {
            const double lhs = inner(d_central(vw), w);
            GridFunction t1(grid), t2(grid);
            const GridFunction smw = shift(w, -1);
            for (std::int64_t j = 0; j < n; ++j) {
                t1[j] = dpv[j] * dw[j];
                t2[j] = smw[j] * dv[j];
            }
            const double r1 = 0.5 * grid.dx * inner(t1, w), r2 = 0.5 * inner(t2, w);
            track(worst.dz1z2, std::abs(lhs - (r1 + r2)),
                  std::abs(lhs) + std::abs(r1) + std::abs(r2));
        }
        {
            // exact discrete Leibniz rule for the third difference, assembled
            // from D(fg) = bar(f)Dg + bar(g)Df and
            // D+D-(fg) = f D+D-g + g D+D-f + D+f D+g + D-f D-g
            const GridFunction lhs = d3(vw);
            const GridFunction d2v = d_plus(d_minus(v)), d2w = d_plus(d_minus(w));
            const GridFunction bd2v = bar_avg(d2v), bd2w = bar_avg(d2w);
            const GridFunction bdpv = bar_avg(dpv), bdpw = bar_avg(dpw);
            const GridFunction bdmv = bar_avg(dmv), bdmw = bar_avg(dmw);
            const GridFunction ddpv = d_central(dpv), ddpw = d_central(dpw);
            const GridFunction ddmv = d_central(dmv), ddmw = d_central(dmw);
            double err = 0.0, scale = 0.0;
            for (std::int64_t j = 0; j < n; ++j) {
                const double r = bv[j] * d3w[j] + d3v[j] * bw[j]
                               + bd2w[j] * dv[j] + bd2v[j] * dw[j]
                               + bdpv[j] * ddpw[j] + bdpw[j] * ddpv[j]
                               + bdmv[j] * ddmw[j] + bdmw[j] * ddmv[j];
                err = std::max(err, std::abs(lhs[j] - r));
                scale = std::max(scale, std::abs(lhs[j]) + std::abs(r));
            }
            track(worst.d3_leibniz, err, scale);
        }
        track(worst.g_orthogonal, std::abs(inner(nonlinear_g(v), v)),
              norm_l2(nonlinear_g(v)) * norm_l2(v));
        track(worst.d3_orthogonal, std::abs(inner(d3v, v)), norm_l2(d3v) * norm_l2(v));

        {
            const GridFunction composed = d_minus(d_central(d_plus(v)));
            for (std::int64_t j = 0; j < n; ++j)
                if (composed[j] != d3v[j]) worst.d3_matches_composition = false;
        }
        if (norm_inf(v) > norm_l2(v) / std::sqrt(dx) * (1.0 + 1e-14))
            worst.inf_l2_bound = false;
    }
    return worst;
}

/// Full operator-identity and conservation property suite behind the
/// `selftest` CLI subcommand. Prints one line per check.
inline bool run_selftest(std::ostream& out) {
    bool ok = true;
    const auto check = [&](const char* name, bool pass, double value) {
        out << (pass ? "[PASS] " : "[FAIL] ") << name << " (" << value << ")\n";
        ok = ok && pass;
    };

    const IdentityResiduals res = identity_suite(1050);
    check("summation by parts (central)", res.sbp_central <= 1e-12, res.sbp_central);
    check("summation by parts (one-sided)", res.sbp_onesided <= 1e-12, res.sbp_onesided);
    check("product rule D", res.product_d <= 1e-12, res.product_d);
    check("product rule D+", res.product_dp <= 1e-12, res.product_dp);
    check("product rule D-", res.product_dm <= 1e-12, res.product_dm);
    check("inner-product identity <D(vw),w>", res.dz1z2 <= 1e-12, res.dz1z2);
    check("third-difference Leibniz expansion", res.d3_leibniz <= 1e-12, res.d3_leibniz);
    check("<G(u),u> = 0", res.g_orthogonal <= 1e-12, res.g_orthogonal);
    check("<D-DD+u,u> = 0", res.d3_orthogonal <= 1e-12, res.d3_orthogonal);
    check("d3 equals composition bit-for-bit", res.d3_matches_composition,
          res.d3_matches_composition ? 1.0 : 0.0);
    check("||v||_inf <= dx^{-1/2}||v||", res.inf_l2_bound, res.inf_l2_bound ? 1.0 : 0.0);

    // short conservation run
    {
        CaseSpec cs{Case::OneSoliton, -10.0, 10.0, -1.0, {}, {}};
        GridFunction u0 = cs.initial_data(512);
        StepperConfig cfg;
        CrankNicolsonStepper stepper(u0.grid, cfg);
        GridFunction u0_copy = u0;
        const double dt = cfl_dt(u0, cfg);
        const RunState final = stepper.evolve(std::move(u0_copy), 0.05, TimeStepPolicy::fixed(dt));
        const double c2 = norm_l2(final.u) / norm_l2(u0);
        check("short soliton run conserves l2", std::abs(c2 - 1.0) <= 1e-10, std::abs(c2 - 1.0));
    }
    return ok;
}

} // namespace kdvcn
