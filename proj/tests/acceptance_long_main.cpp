// Long acceptance runner (opt-in): the two-soliton convergence study and the
// full one-soliton table up to N = 32000. Expect a runtime around an hour,
// dominated by the finest one-soliton row.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#include "kdvcn/harness.hpp"

using namespace kdvcn;

namespace {

double elapsed(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void print_report(const ErrorReport& report) {
    std::printf("    N        E        C1      C2      C3      R_E\n");
    for (const auto& row : report.rows) {
        if (row.failed) {
            std::printf("    %6lld  failed: %s\n", static_cast<long long>(row.n),
                        row.failure.c_str());
            continue;
        }
        const auto opt = [](const std::optional<double>& v) {
            return v ? *v : std::nan("");
        };
        std::printf("    %6lld  %8.5f  %6.3f  %6.4f  %6.3f  %s\n",
                    static_cast<long long>(row.n), row.error, opt(row.conservation.c1),
                    opt(row.conservation.c2), opt(row.conservation.c3),
                    row.rate_to_next ? std::to_string(*row.rate_to_next).c_str() : "");
    }
}

} // namespace

int main() {
    int failed = 0;
    const auto t0 = std::chrono::steady_clock::now();

    {
        std::printf("criterion 6: two-soliton study, N in {500,...,4000}, t from -10 to 10\n");
        ExperimentSpec spec = default_spec(Case::TwoSoliton);
        spec.n_list = {500, 1000, 2000, 4000};
        spec.jobs = 2;
        const ErrorReport report = run_convergence_study(spec, nullptr);
        print_report(report);
        const auto& pre_finest = report.rows[report.rows.size() - 2];
        const bool ok = !pre_finest.failed && pre_finest.rate_to_next &&
                        *pre_finest.rate_to_next >= 1.7 && *pre_finest.rate_to_next <= 2.3;
        std::printf("[%s] criterion 6: finest-pair rate %s in [1.7, 2.3] (%.0f s)\n\n",
                    ok ? "PASS" : "FAIL",
                    pre_finest.rate_to_next ? std::to_string(*pre_finest.rate_to_next).c_str()
                                            : "n/a",
                    elapsed(t0));
        if (!ok) ++failed;
    }

    {
        const auto t1 = std::chrono::steady_clock::now();
        std::printf("full one-soliton ladder, N in {2000,...,32000}, t_end = 2\n");
        ExperimentSpec spec = default_spec(Case::OneSoliton);   // n_list 2000..32000
        spec.jobs = 2;
        const ErrorReport report = run_convergence_study(spec, nullptr);
        print_report(report);
        const auto& pre_finest = report.rows[report.rows.size() - 2];
        const bool ok = !pre_finest.failed && pre_finest.rate_to_next &&
                        *pre_finest.rate_to_next >= 1.8 && *pre_finest.rate_to_next <= 2.2;
        std::printf("[%s] full ladder: finest-pair rate %s in [1.8, 2.2] (%.0f s)\n",
                    ok ? "PASS" : "FAIL",
                    pre_finest.rate_to_next ? std::to_string(*pre_finest.rate_to_next).c_str()
                                            : "n/a",
                    elapsed(t1));
        if (!ok) ++failed;
    }

    std::printf("\n%d long criteria failed, %.0f s total\n", failed, elapsed(t0));
    return failed;
}
