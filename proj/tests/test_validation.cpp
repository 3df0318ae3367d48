#include <wdro/validation.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace wdro;

namespace {

OperatorConfig brownian(std::vector<double> drifts, double m, int n = 257)
{
    std::vector<double> vols(drifts.size(), 1.0);
    return OperatorConfig{ReferenceModel::brownian_1d(drifts, vols), AmbiguitySpec{m, 2.0},
                          Grid::line(-8.0, 8.0, n)};
}

const CompactWindow window{{-4.0}, {4.0}};

} // namespace

TEST(CheckReport, PassedAndSerialised)
{
    CheckReport rep;
    rep.name = "demo";
    rep.add("a", 0.5, 1.0);
    rep.add("b", 3.0);
    rep.runtime_seconds = 12.0;
    rep.passed = true;
    EXPECT_TRUE(rep.at("a").passed());
    EXPECT_TRUE(rep.at("b").passed());
    EXPECT_THROW(rep.at("c"), input_error);
    const auto j = rep.to_json();
    EXPECT_EQ(j.at("name"), "demo");
    EXPECT_FALSE(j.contains("runtime_seconds"));
    rep.add("c", 2.0, 1.0);
    EXPECT_FALSE(rep.at("c").passed());
}

TEST(CheckReport, TableCsv)
{
    const Table t{"levels", {"level", "gap"}, {{1.0, 0.5}, {2.0, 0.25}}};
    std::stringstream ss;
    write_table_csv(ss, t);
    EXPECT_EQ(ss.str(), "level,gap\n1,0.5\n2,0.25\n");
}

TEST(InterpolationSlack, QuadraticCurvature)
{
    const Grid g = Grid::line(-1.0, 1.0, 9);
    const ScalarField f = ScalarField::sample(g, [](const Point& x) { return x[0] * x[0]; });
    const double h = g.spacing(0);
    // second difference of x^2 is 2 h^2 everywhere
    EXPECT_NEAR(interpolation_slack(f), 2.0 * h * h / 8.0, 1e-15);
    EXPECT_EQ(interpolation_slack(ScalarField::constant(g, 1.0)), 0.0);
}

TEST(Sensitivity, TrivialCases)
{
    const std::vector<double> ts{0.2, 0.1};
    const auto constant = check_sensitivity(brownian({-0.5, 0.5}, 0.5), test_function("constant"),
                                            ts, window);
    EXPECT_TRUE(constant.passed);
    EXPECT_NEAR(constant.at("E(0.2)").value, 0.0, 1e-10);
    EXPECT_NEAR(constant.at("E(0.1)").value, 0.0, 1e-10);

    const auto zero = check_sensitivity(brownian({0.0}, 0.0), test_function("tanh"), ts, window);
    EXPECT_EQ(zero.at("E(0.2)").value, 0.0);
    EXPECT_EQ(zero.at("E(0.1)").value, 0.0);
    EXPECT_TRUE(zero.passed);
}

TEST(Sensitivity, RejectsBadTimeLists)
{
    const auto cfg = brownian({0.0}, 0.5);
    EXPECT_THROW(check_sensitivity(cfg, test_function("sin"), {0.1, 0.2}, window), input_error);
    EXPECT_THROW(check_sensitivity(cfg, test_function("sin"), {}, window), input_error);
}

TEST(Generator, HeatQuotient)
{
    const auto rep = check_generator(brownian({0.0}, 0.0, 513), test_function("cos"), {0.1, 0.05},
                                     window, {6, 1e-6});
    EXPECT_LE(rep.at("E(0.05)").value, 0.05);
    EXPECT_TRUE(rep.passed);
    const auto constant = check_generator(brownian({0.0}, 0.5), test_function("constant"), {0.1},
                                          window);
    EXPECT_NEAR(constant.at("E(0.1)").value, 0.0, 1e-10);
}

TEST(Semigroup, TrivialAndLinear)
{
    const auto cfg = brownian({0.0}, 0.0, 513);
    const ScalarField f = test_function("cos").sample(cfg.grid);
    const auto rep = check_semigroup(cfg, f, {{0.0, 0.25}, {0.25, 0.25}}, window, {6, 1e-3});
    EXPECT_NEAR(rep.at("gap(0,0.25)").value, 0.0, 1e-12);
    EXPECT_TRUE(rep.passed);
}

TEST(Properties, SmallSuitePasses)
{
    const auto rep = check_operator_properties(brownian({-0.5, 0.5}, 0.5, 129), 3, 11);
    EXPECT_TRUE(rep.passed) << rep.summary();
    EXPECT_EQ(rep.at("lipschitz_failures").value, 0.0);
}

TEST(DualOracle, DeterministicAndPassing)
{
    const auto a = check_dual_oracle(20, 5);
    const auto b = check_dual_oracle(20, 5);
    EXPECT_TRUE(a.passed) << a.summary();
    EXPECT_EQ(a.to_json(), b.to_json());
    EXPECT_LE(a.at("max_abs_error_radius_zero").value, 1e-12);
}

TEST(CrossCheck, HeatAnchorsBoth)
{
    const auto cfg = brownian({0.0}, 0.0, 513);
    const ScalarField u0 = test_function("cos").sample(cfg.grid);
    const auto res = cross_check_pde(
        cfg, u0, 0.5, window, {8, 1e-3}, {},
        [](const Point& x) { return std::exp(-0.25) * std::cos(x[0]); }, {5e-3, 5e-3, 1e-8});
    EXPECT_TRUE(res.report.passed) << res.report.summary();
    EXPECT_LE(res.report.at("operator_pde_gap").value, 5e-3);
}

TEST(CrossCheck, GameDominance)
{
    const auto cfg = brownian({-0.5, 0.5}, 0.25, 129);
    const ScalarField u0 = test_function("tanh").sample(cfg.grid);
    const auto res = cross_check_pde(cfg, u0, 0.25, window, {5, 1e-3});
    EXPECT_LE(res.report.at("operator_dominance_violation").value, 1e-8);
    EXPECT_LE(res.report.at("pde_dominance_violation").value, 1e-8);
}

TEST(Certificates, ConstantDataDoesNotMove)
{
    const auto cfg = brownian({0.0}, 0.5, 129);
    const auto rep = refinement_certificates(
        cfg, [](const Point&) { return 0.75; }, 0.25, window, 1e-3, {4, 1e-3});
    for (const char* label : {"change_grid_doubled", "change_quad_doubled",
                              "change_density_doubled", "change_dual_tol_halved"}) {
        EXPECT_NEAR(rep.at(label).value, 0.0, 1e-12) << label;
    }
    EXPECT_TRUE(rep.passed);
}

TEST(Acceptance, TitlesAndSelection)
{
    EXPECT_EQ(acceptance_titles().size(), 11u);
    AcceptanceSettings s;
    s.dual_trials = 10;
    std::vector<int> seen;
    const auto out = run_acceptance(s, {1}, [&](const CriterionOutcome& o) { seen.push_back(o.id); });
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(seen, std::vector<int>{1});
    EXPECT_TRUE(out[0].passed);
    EXPECT_THROW(run_acceptance(s, {12}), input_error);
}
