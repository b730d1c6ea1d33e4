#pragma once

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "kdvcn/harness.hpp"

namespace kdvcn {

namespace detail {

inline std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline std::filesystem::path snapshot_step_path(const std::filesystem::path& out,
                                                std::int64_t step) {
    char suffix[32];
    std::snprintf(suffix, sizeof(suffix), ".step%08lld", static_cast<long long>(step));
    std::filesystem::path p = out;
    const std::string ext = p.extension().string();
    p.replace_extension();
    return p.string() + suffix + ext;
}

} // namespace detail

/// CLI entry point. Exit codes: 0 success, 1 solver failure, 2 usage error.
inline int cli_main(int argc, const char* const* argv) {
    CLI::App app{"conservative Crank-Nicolson solver for the KdV equation"};
    app.require_subcommand(1);

    auto* selftest = app.add_subcommand("selftest", "run the operator identity and conservation suite");

    auto* run = app.add_subcommand("run", "run one evolution and emit snapshots");
    std::string run_case = "one-soliton", run_out = "run.csv", initial_file;
    std::int64_t run_n = 2000;
    double run_t_end = 2.0;
    std::int64_t snapshot_every = 0;
    double opt_x_left = 0.0, opt_x_right = 0.0, opt_t_start = 0.0, opt_radius = 0.0;
    double sol_a = 0.5, sol_b = 1.0;
    std::string regime;
    bool adaptive = false;
    run->add_option("--case", run_case, "one-soliton|two-soliton|nonsmooth-l2|custom-file");
    run->add_option("--n", run_n, "grid cells")->required();
    run->add_option("--t-end", run_t_end, "run duration")->required();
    run->add_option("--snapshot-every", snapshot_every, "emit a snapshot every K steps");
    run->add_option("--out", run_out, "final snapshot path")->required();
    auto* xl = run->add_option("--x-left", opt_x_left, "window left end");
    auto* xr = run->add_option("--x-right", opt_x_right, "window right end");
    auto* ts = run->add_option("--t-start", opt_t_start, "initial-datum solution time");
    auto* rad = run->add_option("--radius", opt_radius, "weight radius R");
    run->add_option("--soliton-a", sol_a, "two-soliton slow speed parameter");
    run->add_option("--soliton-b", sol_b, "two-soliton fast speed parameter");
    run->add_option("--regime", regime, "CFL regime: h3|l2 (default per case)");
    run->add_option("--initial-file", initial_file, "custom-file initial snapshot");
    run->add_flag("--adaptive", adaptive, "re-evaluate the CFL step every step");

    auto* conv = app.add_subcommand("convergence", "run a convergence study from a config file");
    std::string conv_config, conv_out;
    conv->add_option("--config", conv_config, "experiment config file")->required();
    conv->add_option("--out", conv_out, "report CSV path (overrides output_path)");

    auto* weight = app.add_subcommand("weight", "emit a weight-profile table");
    double w_radius = 5.0, w_x_left = -10.0, w_x_right = 10.0;
    std::int64_t w_n = 1000;
    std::string w_out = "weight.csv";
    weight->add_option("--radius", w_radius, "weight radius R")->required();
    weight->add_option("--n", w_n, "grid cells")->required();
    weight->add_option("--out", w_out, "output CSV path")->required();
    weight->add_option("--x-left", w_x_left, "window left end");
    weight->add_option("--x-right", w_x_right, "window right end");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (selftest->parsed()) {
            return run_selftest(std::cout) ? 0 : 1;
        }

        if (run->parsed()) {
            ExperimentSpec spec = default_spec(detail::parse_case(run_case));
            if (*xl) spec.scenario.x_left = opt_x_left;
            if (*xr) spec.scenario.x_right = opt_x_right;
            if (*ts) spec.scenario.t_start = opt_t_start;
            if (*rad) spec.weight_radius = opt_radius;
            spec.scenario.soliton = SolitonParams{sol_a, sol_b};
            spec.scenario.initial_file = initial_file;
            if (!regime.empty()) {
                if (regime == "h3") spec.stepper.regime = CflRegime::H3;
                else if (regime == "l2") spec.stepper.regime = CflRegime::L2;
                else throw ConfigError("--regime: expected h3|l2");
            }
            spec.stepper.validate();

            GridFunction u0 = spec.scenario.initial_data(run_n);
            const WeightProfile wp = build_weight(u0.grid, spec.weight_radius);
            CrankNicolsonStepper stepper(u0.grid, spec.stepper, &wp);
            const double dt = cfl_dt(u0, spec.stepper, &wp);
            const TimeStepPolicy policy =
                adaptive ? TimeStepPolicy::adaptive() : TimeStepPolicy::fixed(dt);

            const auto meta = [&](double t, std::int64_t step) {
                return std::vector<std::pair<std::string, std::string>>{
                    {"case", case_name(spec.scenario.kind)},
                    {"t", format_g17(t)},
                    {"step", std::to_string(step)},
                };
            };
            std::vector<StepObserver> observers;
            if (snapshot_every > 0) {
                write_snapshot(detail::snapshot_step_path(run_out, 0), u0, meta(0.0, 0));
                observers.push_back([&](const StepEvent& ev) {
                    if ((ev.step_index + 1) % snapshot_every == 0)
                        write_snapshot(detail::snapshot_step_path(run_out, ev.step_index + 1),
                                       ev.u_after, meta(ev.t_after, ev.step_index + 1));
                });
            }

            GridFunction u0_copy = u0;
            const RunState final =
                stepper.evolve(std::move(u0_copy), run_t_end, policy, observers);
            write_snapshot(run_out, final.u, meta(final.t, final.step_index));

            const ConservationRecord rec = conserved(final.u, u0, final.t);
            const auto show = [](const std::optional<double>& v) {
                return v ? format_g17(*v) : std::string("n/a");
            };
            std::cout << "steps = " << final.step_index << ", dt = " << format_g17(dt)
                      << ", C1 = " << show(rec.c1) << ", C2 = " << show(rec.c2)
                      << ", C3 = " << show(rec.c3) << "\n";
            std::cout << "final snapshot: " << run_out << "\n";
            return 0;
        }

        if (conv->parsed()) {
            ExperimentSpec spec = from_config(parse_config(detail::read_file(conv_config)));
            if (!conv_out.empty()) spec.output_path = conv_out;
            if (spec.output_path.empty())
                throw ConfigError("convergence: no output path (config output_path or --out)");
            const ErrorReport report = run_convergence_study(spec, &std::cout);
            write_report(report, spec.output_path);
            std::cout << report_csv(report);
            return 0;
        }

        if (weight->parsed()) {
            const Grid grid = Grid::over(w_x_left, w_x_right, w_n);
            const WeightProfile wp = build_weight(grid, w_radius);
            std::ostringstream out;
            out << "# radius_R = " << format_g17(w_radius) << "\n";
            out << "# c_R = " << format_g17(wp.c_R) << "\n";
            out << "x,p,p1,p2,p3\n";
            for (std::int64_t j = 0; j < grid.n_cells; ++j)
                out << format_g17(grid.x(j)) << ',' << format_g17(wp.p[j]) << ','
                    << format_g17(wp.p1[j]) << ',' << format_g17(wp.p2[j]) << ','
                    << format_g17(wp.p3[j]) << "\n";
            std::filesystem::path path(w_out);
            if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
            std::ofstream f(path);
            if (!f) throw ConfigError("weight: cannot open " + w_out);
            f << out.str();
            std::cout << "c_R = " << format_g17(wp.c_R) << ", table: " << w_out << "\n";
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace kdvcn
