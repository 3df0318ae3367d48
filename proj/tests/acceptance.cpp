// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance                  run criteria 1..11
//   acceptance --criterion 4    run one criterion (repeatable)

#include <wdro/validation.hpp>

#include <CLI11.hpp>

#include <array>
#include <cstdio>
#include <iostream>
#include <vector>

using namespace wdro;

namespace {

// Tolerances and budgets pinned to the acceptance values.
AcceptanceSettings pinned_settings()
{
    AcceptanceSettings s;
    s.grid = Grid::line(-8.0, 8.0, 513);
    s.window = CompactWindow{{-4.0}, {4.0}};
    s.quad_order = 16;
    s.p = 2.0;
    s.dual_tol = 1e-10;
    s.reach_factor = 4.0;
    s.candidate_density = 4;
    s.limit = LimitOptions{8, 1e-3};
    s.cfl_safety = 0.9;
    s.seed = 7;
    s.dual_trials = 200;
    s.property_trials = 100;

    s.dual_tolerance = 1e-6;
    s.contraction_tolerance = 1e-9;
    s.lipschitz_slack_factor = 10.0;
    s.refinement_tolerance = 1e-8;
    s.sensitivity_final = 0.05;
    s.sensitivity_slack = 0.1;
    s.generator_factor = 0.1;
    s.semigroup_tolerance = 5e-3;
    s.heat_tolerance = 5e-3;
    s.cdf_tolerance = 1e-2;
    s.game_tolerance = 2e-2;
    s.dominance_tolerance = 1e-8;
    s.certificate_fraction = 0.5;
    return s;
}

constexpr std::array<double, 11> runtime_budget_seconds{60, 120, 60, 180, 120, 300,
                                                         600, 120, 600, 900, 1800};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"acceptance criteria"};
    std::vector<int> selection;
    app.add_option("--criterion", selection, "criterion number (repeatable)")
        ->check(CLI::Range(1, 11));
    CLI11_PARSE(app, argc, argv);

    bool all_passed = true;
    try {
        run_acceptance(pinned_settings(), selection, [&](const CriterionOutcome& o) {
            const double budget = runtime_budget_seconds[o.id - 1];
            const bool in_time = o.report.runtime_seconds <= budget;
            const bool ok = o.passed && in_time;
            all_passed = all_passed && ok;
            std::printf("[%s] criterion %d (%s): %s; runtime %.2f s (<= %.0f s)\n",
                        ok ? "PASS" : "FAIL", o.id, o.title.c_str(), o.report.summary().c_str(),
                        o.report.runtime_seconds, budget);
            for (const auto& m : o.report.measurements) {
                if (!m.threshold) {
                    std::printf("        %s = %.6g\n", m.label.c_str(), m.value);
                }
            }
            std::fflush(stdout);
        });
    } catch (const std::exception& e) {
        std::printf("[FAIL] acceptance aborted: %s\n", e.what());
        return 3;
    }
    return all_passed ? 0 : 1;
}
