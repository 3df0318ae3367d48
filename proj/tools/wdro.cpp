// Experiment driver: loads a JSON config, runs one subcommand, writes
// manifest.json, report.json and CSV tables under the output directory.
//
// Exit codes: 0 all checks passed, 1 a check failed, 2 bad arguments or
// config, 3 internal error.

#include <wdro/config.hpp>
#include <wdro/parallel.hpp>
#include <wdro/validation.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace wdro;

namespace {

const std::vector<std::string> subcommands{"sensitivity", "generator", "semigroup",
                                           "limit",       "pde",       "crosscheck",
                                           "properties",  "certify",   "all"};

struct FieldOutput {
    std::string file;
    std::function<void(std::ostream&)> write;
};

struct RunResult {
    std::vector<CheckReport> reports;
    std::vector<FieldOutput> fields;
    std::vector<std::string> lines;
};

std::function<double(const Point&)> oracle_for(const ExperimentConfig& cfg, double T)
{
    const std::string kind = cfg.get<std::string>("experiment.oracle");
    if (kind == "none") {
        return {};
    }
    const ReferenceModel model = cfg.model();
    const std::string fn = cfg.get<std::string>("experiment.function");
    if (model.family() != ModelFamily::BrownianDrift || model.action_count() != 1 ||
        model.dim() != 1) {
        throw config_error("experiment.oracle: needs a single-action 1-d brownian_drift model");
    }
    const double b = model.action(0).b[0];
    const double s2 = model.diffusion(0)(0, 0);
    const double m = cfg.ambiguity().m;
    if (kind == "heat") {
        if (fn != "cos" || m != 0.0) {
            throw config_error("experiment.oracle: 'heat' needs function cos and ambiguity.m = 0");
        }
        return [=](const Point& x) { return std::exp(-0.5 * s2 * T) * std::cos(x[0] + b * T); };
    }
    if (fn != "normal_cdf") {
        throw config_error("experiment.oracle: 'monotone_cdf' needs function normal_cdf");
    }
    return [=](const Point& x) { return normal_cdf((x[0] + (b + m) * T) / std::sqrt(1.0 + s2 * T)); };
}

double oracle_tolerance(const ExperimentConfig& cfg)
{
    const std::string kind = cfg.get<std::string>("experiment.oracle");
    if (kind == "heat") {
        return cfg.threshold("heat");
    }
    if (kind == "monotone_cdf") {
        return cfg.threshold("cdf");
    }
    return cfg.threshold("crosscheck");
}

FieldOutput field_csv(const std::string& file, const ScalarField& f)
{
    return {file, [f](std::ostream& os) { write_csv(os, f); }};
}

RunResult run_subcommand(const std::string& sub, const ExperimentConfig& cfg)
{
    RunResult out;
    const OperatorConfig op = cfg.operator_config();
    const CompactWindow window = cfg.window();
    const LimitOptions lim = cfg.limit_options();
    const TestFunction fn = test_function(cfg.get<std::string>("experiment.function"));
    const double T = cfg.get<double>("experiment.horizon");
    const auto t_list = cfg.get<std::vector<double>>("experiment.t_list");

    if (sub == "sensitivity") {
        out.reports.push_back(check_sensitivity(
            op, fn, t_list, window,
            {cfg.threshold("sensitivity_final_factor"), 0.0,
             cfg.threshold("sensitivity_monotone_slack")}));
    } else if (sub == "generator") {
        out.reports.push_back(check_generator(
            op, fn, t_list, window, lim,
            {cfg.threshold("generator_factor"), cfg.threshold("generator_monotone_slack")}));
    } else if (sub == "semigroup") {
        std::vector<std::pair<double, double>> pairs;
        for (const auto& p : cfg.get<std::vector<std::vector<double>>>("experiment.pairs")) {
            pairs.emplace_back(p[0], p[1]);
        }
        out.reports.push_back(check_semigroup(op, fn.sample(op.grid), pairs, window, lim,
                                              {cfg.threshold("semigroup_factor")}));
    } else if (sub == "limit") {
        const auto res = scaling_limit(op, T, fn.sample(op.grid), lim.max_level, lim.stop_tol, window);
        CheckReport rep;
        rep.name = "limit";
        rep.parameters = {{"function", fn.name}, {"T", T}, {"stop_tol", lim.stop_tol},
                          {"max_level", lim.max_level}};
        rep.add("levels_used", res.levels_used);
        rep.add("converged", res.converged ? 1.0 : 0.0);
        Table table{"levels", {"level", "gap"}, {}};
        for (const auto& g : res.level_gaps) {
            table.rows.push_back({static_cast<double>(g.level), g.gap});
        }
        rep.tables.push_back(std::move(table));
        out.fields.push_back(field_csv("limit.csv", res.field));
        out.lines.push_back("limit: levels_used = " + std::to_string(res.levels_used) +
                            (res.converged ? " (converged)" : " (max_level reached)"));
        out.reports.push_back(std::move(rep));
    } else if (sub == "pde") {
        auto times = cfg.get<std::vector<double>>("experiment.snapshot_times");
        times.push_back(T);
        const PdeSolution sol = solve(op, cfg.scheme(), fn.sample(op.grid), T, times);
        CheckReport rep;
        rep.name = "pde";
        rep.parameters = {{"function", fn.name}, {"T", T}, {"cfl_safety", cfg.scheme().cfl_safety}};
        rep.add("dt", sol.summary.dt);
        rep.add("steps", static_cast<double>(sol.summary.steps));
        rep.add("cfl_number", sol.summary.cfl_number);
        rep.add("cfl_margin", sol.summary.cfl_margin);
        const SpaceTimeField field = sol.field;
        out.fields.push_back({"pde.csv", [field](std::ostream& os) { write_csv(os, field); }});
        out.reports.push_back(std::move(rep));
    } else if (sub == "crosscheck") {
        const auto oracle = oracle_for(cfg, T);
        const double otol = oracle_tolerance(cfg);
        auto res = cross_check_pde(op, fn.sample(op.grid), T, window, lim, cfg.scheme(), oracle,
                                   {cfg.threshold("crosscheck"), otol, cfg.threshold("dominance")});
        out.fields.push_back(field_csv("limit.csv", res.limit));
        out.fields.push_back(field_csv("pde.csv", res.pde));
        out.reports.push_back(std::move(res.report));
    } else if (sub == "properties") {
        PropertyThresholds th;
        th.contraction = th.monotonicity = cfg.threshold("contraction");
        th.lipschitz_slack_factor = cfg.threshold("lipschitz_slack_factor");
        th.refinement = cfg.threshold("refinement");
        out.reports.push_back(check_operator_properties(op, cfg.get<int>("experiment.trials"),
                                                        cfg.seed(), {0.05, 0.1, 0.5}, th, window));
        out.reports.push_back(check_dual_oracle(cfg.get<int>("experiment.dual_trials"), cfg.seed(),
                                                cfg.threshold("dual_oracle"), op.dual_tol));
    } else if (sub == "certify") {
        out.reports.push_back(refinement_certificates(
            op, [fn](const Point& x) { return fn(x); }, T, window, oracle_tolerance(cfg), lim,
            cfg.scheme(), cfg.threshold("certificate_fraction")));
    } else if (sub == "all") {
        for (auto& o : run_acceptance(cfg.acceptance_settings())) {
            o.report.name = "criterion_" + std::to_string(o.id) + "_" + o.report.name;
            o.report.passed = o.passed;
            out.lines.push_back("criterion " + std::to_string(o.id) + " [" + o.title +
                                "]: " + (o.passed ? "PASS" : "FAIL"));
            out.reports.push_back(std::move(o.report));
        }
    }
    return out;
}

void write_outputs(const fs::path& dir, const std::string& sub, const ExperimentConfig& cfg,
                   const RunResult& res, bool passed)
{
    fs::create_directories(dir);
    const auto formats = cfg.get<std::vector<std::string>>("output.formats");
    auto has = [&](const char* f) { return std::find(formats.begin(), formats.end(), f) != formats.end(); };

    json manifest{{"subcommand", sub}, {"seed", cfg.seed()}, {"config", cfg.doc()}};
    std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';

    if (has("json")) {
        json reports = json::array();
        for (const auto& r : res.reports) {
            reports.push_back(r.to_json());
        }
        json report{{"subcommand", sub}, {"passed", passed}, {"reports", reports}};
        std::ofstream(dir / "report.json") << report.dump(2) << '\n';
    }
    if (has("csv")) {
        std::ofstream summary(dir / "summary.csv");
        summary << "report,label,value,threshold,passed\n" << std::setprecision(17);
        for (const auto& r : res.reports) {
            for (const auto& m : r.measurements) {
                summary << r.name << ',' << m.label << ',' << m.value << ',';
                if (m.threshold) {
                    summary << *m.threshold;
                }
                summary << ',' << (m.passed() ? 1 : 0) << '\n';
            }
            for (const auto& t : r.tables) {
                const std::string file = t.name == r.name ? t.name : r.name + "_" + t.name;
                std::ofstream os(dir / (file + ".csv"));
                write_table_csv(os, t);
            }
        }
        for (const auto& f : res.fields) {
            std::ofstream os(dir / f.file);
            f.write(os);
        }
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Wasserstein DRO scaling-limit experiments"};
    std::string sub;
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    bool quiet = false;

    app.add_option("subcommand", sub, "experiment to run")
        ->required()
        ->check(CLI::IsMember(subcommands));
    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--set", overrides, "dotted key=value override (repeatable)");
    app.add_option("--out", out_dir, "output directory (overrides output.directory)");
    auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides experiment.seed)");
    app.add_option("--threads", threads, "worker thread cap (0 = all cores)");
    app.add_flag("--quiet", quiet, "suppress the summary on stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    ExperimentConfig cfg;
    try {
        cfg = config_path.empty() ? ExperimentConfig() : ExperimentConfig::load(config_path);
        for (const auto& o : overrides) {
            cfg.set(o);
        }
        if (*seed_opt) {
            cfg.set("experiment.seed=" + std::to_string(seed));
        }
        if (!out_dir.empty()) {
            cfg.set("output.directory=" + json(out_dir).dump());
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    max_threads() = threads;

    try {
        const RunResult res = run_subcommand(sub, cfg);
        bool passed = true;
        for (const auto& r : res.reports) {
            passed = passed && r.passed;
        }
        write_outputs(cfg.get<std::string>("output.directory"), sub, cfg, res, passed);
        if (!quiet) {
            for (const auto& l : res.lines) {
                std::cout << l << '\n';
            }
            for (const auto& r : res.reports) {
                std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << std::setprecision(3)
                          << r.runtime_seconds << " s)";
                const std::string s = r.summary();
                if (!s.empty()) {
                    std::cout << ": " << s;
                }
                std::cout << '\n';
            }
        }
        return passed ? 0 : 1;
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const input_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 3;
    }
}
