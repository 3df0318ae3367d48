#include <wdro/dro_dual.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace wdro;

namespace {

DiscreteMeasure measure(std::vector<double> atoms, std::vector<double> weights)
{
    DiscreteMeasure d;
    for (double a : atoms) {
        d.atoms.push_back(make_point(a));
    }
    d.weights = std::move(weights);
    return d;
}

std::vector<Point> points(std::initializer_list<double> xs)
{
    std::vector<Point> out;
    for (double x : xs) {
        out.push_back(make_point(x));
    }
    return out;
}

double neg_abs(const Point& z) { return -std::abs(z[0]); }

DualInstance two_atom_instance(std::vector<Point> left, std::vector<Point> right)
{
    DualInstance inst;
    inst.source = measure({-1.0, 1.0}, {0.5, 0.5});
    inst.candidates = {std::move(left), std::move(right)};
    inst.integrand = neg_abs;
    inst.radius = 0.5;
    inst.order = 2.0;
    return inst;
}

// Random 1-d instance small enough for the oracle.
DualInstance random_instance(std::mt19937_64& rng, double radius, double order)
{
    std::uniform_int_distribution<int> atoms_d(1, 3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const int atoms = atoms_d(rng);
    const int per_atom = std::min(4, 12 / atoms);
    DualInstance inst;
    double total = 0.0;
    for (int i = 0; i < atoms; ++i) {
        const double y = u(rng);
        const double w = 0.1 + std::abs(u(rng));
        total += w;
        inst.source.atoms.push_back(make_point(y));
        inst.source.weights.push_back(w);
        std::vector<Point> z{make_point(y)};
        for (int j = 1; j < per_atom; ++j) {
            z.push_back(make_point(y + 1.5 * u(rng)));
        }
        inst.candidates.push_back(std::move(z));
    }
    for (double& w : inst.source.weights) {
        w /= total;
    }
    const double a = u(rng), b = u(rng), c = 2.0 * u(rng);
    inst.integrand = [a, b, c](const Point& z) { return std::sin(c * z[0] + a) + b * z[0]; };
    inst.radius = radius;
    inst.order = order;
    return inst;
}

} // namespace

TEST(DualObjective, HandEvaluations)
{
    DualInstance inst;
    inst.source = measure({0.0}, {1.0});
    inst.candidates = {points({0.0, 1.0})};
    inst.integrand = [](const Point& z) { return z[0]; };
    inst.radius = 1.0;
    inst.order = 2.0;
    EXPECT_EQ(dual_objective(inst, 0.0), 1.0);
    EXPECT_EQ(dual_objective(inst, 1.0), 1.0);
    EXPECT_THROW(dual_objective(inst, -1.0), input_error);
}

TEST(DualObjective, ZeroRadiusTendsToStayValue)
{
    DualInstance inst = two_atom_instance(points({-1.5, -1.0, 0.0}), points({1.0, 0.5}));
    inst.radius = 0.0;
    const double stay = -1.0;
    EXPECT_GE(dual_objective(inst, 0.0), stay);
    EXPECT_NEAR(dual_objective(inst, 1e9), stay, 1e-12);
}

TEST(WassersteinSup, ZeroRadiusIsPlainExpectation)
{
    DualInstance inst;
    const auto& [x, w] = gauss_hermite(32);
    for (std::size_t k = 0; k < x.size(); ++k) {
        inst.source.atoms.push_back(make_point(x[k]));
        inst.candidates.push_back({make_point(x[k]), make_point(x[k] + 0.1)});
    }
    inst.source.weights = w;
    inst.integrand = [](const Point& z) { return std::cos(z[0]); };
    inst.radius = 0.0;
    const DualSolution s = wasserstein_sup(inst, 1e-10);
    EXPECT_NEAR(s.value, std::exp(-0.5), 1e-12);
    EXPECT_TRUE(std::isinf(s.lambda_star));
    EXPECT_NEAR(wasserstein_inf(inst, 1e-10), std::exp(-0.5), 1e-12);
}

TEST(WassersteinSup, LinearIntegrandShiftsByRadius)
{
    DualInstance inst;
    inst.source = measure({0.0}, {1.0});
    std::vector<Point> z{make_point(0.0)};
    const double step = 0.01;
    for (int k = 1; k <= 200; ++k) {
        z.push_back(make_point(k * step));
        z.push_back(make_point(-k * step));
    }
    inst.candidates = {z};
    inst.integrand = [](const Point& p) { return p[0]; };
    inst.radius = 0.3;
    EXPECT_NEAR(wasserstein_sup(inst, 1e-10).value, 0.3, step);
    EXPECT_NEAR(wasserstein_inf(inst, 1e-10), -0.3, step);
}

TEST(WassersteinInf, ConcavePeakMovesMassByRadius)
{
    for (double r : {0.1, 0.4, 1.0}) {
        DualInstance inst;
        inst.source = measure({0.0}, {1.0});
        inst.candidates = {points({0.0, -r, r, 0.5 * r, -0.5 * r})};
        inst.integrand = neg_abs;
        inst.radius = r;
        EXPECT_NEAR(wasserstein_inf(inst, 1e-10), -r, 1e-12);
        EXPECT_NEAR(wasserstein_sup(inst, 1e-10).value, 0.0, 1e-12);
    }
}

TEST(WassersteinSup, TwoAtomExampleHandValue)
{
    const auto z = points({-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5});
    // Each atom moves 0.5 toward the origin: cost 2 * 0.5 * 0.25 = r^2.
    const DualInstance inst = two_atom_instance(z, z);
    EXPECT_NEAR(wasserstein_sup(inst, 1e-10).value, -0.5, 1e-9);
    // 14 candidates exceed the enumeration limit.
    EXPECT_THROW(brute_force_sup(inst), input_error);
}

TEST(WassersteinSup, TwoAtomExampleMatchesOracle)
{
    const DualInstance inst = two_atom_instance(points({-1.5, -1.0, -0.5, 0.0, 0.5, 1.0}),
                                                points({-1.0, -0.5, 0.0, 0.5, 1.0, 1.5}));
    const double oracle = brute_force_sup(inst);
    EXPECT_NEAR(oracle, -0.5, 1e-12);
    EXPECT_NEAR(wasserstein_sup(inst, 1e-10).value, oracle, 1e-6);
}

TEST(WassersteinSup, Errors)
{
    DualInstance inst = two_atom_instance(points({-1.0, 0.0}), points({1.0}));
    EXPECT_THROW(wasserstein_sup(inst, 0.0), input_error);
    inst.integrand = [](const Point& z) { return z[0] > 0.5 ? std::nan("") : 0.0; };
    EXPECT_THROW(wasserstein_sup(inst, 1e-10), data_error);
    DualInstance no_stay = two_atom_instance(points({-0.5}), points({1.0}));
    EXPECT_THROW(wasserstein_sup(no_stay, 1e-10), input_error);
}

TEST(BruteForce, TrivialRadii)
{
    DualInstance inst = two_atom_instance(points({-1.0, -0.2, 0.3}), points({1.0, 0.6, 2.0}));
    inst.radius = 0.0;
    EXPECT_EQ(brute_force_sup(inst), -1.0);
    inst.radius = 10.0;
    EXPECT_NEAR(brute_force_sup(inst), 0.5 * -0.2 + 0.5 * -0.6, 1e-15);
    EXPECT_NEAR(wasserstein_sup(inst, 1e-10).value, 0.5 * -0.2 + 0.5 * -0.6, 1e-12);
}

TEST(BruteForce, RefusesLargeInstances)
{
    DualInstance inst;
    for (int i = 0; i < 6; ++i) {
        inst.source.atoms.push_back(make_point(i));
        inst.source.weights.push_back(1.0 / 6.0);
        inst.candidates.push_back({make_point(i)});
    }
    inst.integrand = neg_abs;
    inst.radius = 0.1;
    EXPECT_THROW(brute_force_sup(inst), input_error);
}

TEST(DualProperties, OracleSandwich)
{
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 300; ++trial) {
        const double r = std::array<double, 4>{0.0, 0.1, 0.5, 2.0}[trial % 4];
        const double p = std::array<double, 3>{2.0, 1.5, 3.0}[trial % 3];
        const DualInstance inst = random_instance(rng, r, p);
        const double oracle = brute_force_sup(inst);
        const double dual = wasserstein_sup(inst, 1e-12).value;
        EXPECT_GE(dual, oracle - 1e-9) << "trial " << trial;
        EXPECT_LE(dual, oracle + 1e-6) << "trial " << trial;
    }
}

TEST(DualProperties, MonotoneInRadius)
{
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 100; ++trial) {
        DualInstance inst = random_instance(rng, 0.0, 2.0);
        double last = -INFINITY;
        for (double r : {0.0, 0.05, 0.2, 0.5, 1.0, 3.0}) {
            inst.radius = r;
            const double v = wasserstein_sup(inst, 1e-12).value;
            EXPECT_GE(v, last - 1e-12);
            last = v;
        }
    }
}

TEST(DualProperties, APrioriBound)
{
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        DualInstance inst = random_instance(rng, 0.0, 2.0);
        const double v0 = wasserstein_sup(inst, 1e-12).value;
        // integrand sin(cz + a) + bz is (|c| + |b|)-Lipschitz; bound it by 3
        for (double r : {0.05, 0.3, 1.0}) {
            inst.radius = r;
            EXPECT_LE(wasserstein_sup(inst, 1e-12).value - v0, 3.0 * r + 1e-9);
        }
    }
}

TEST(DualProperties, TranslationCovariance)
{
    std::mt19937_64 rng(24);
    for (int trial = 0; trial < 100; ++trial) {
        DualInstance inst = random_instance(rng, 0.3, 2.0);
        const double v = wasserstein_sup(inst, 1e-12).value;
        DualInstance shifted = inst;
        shifted.integrand = [g = inst.integrand](const Point& z) { return g(z) + 2.5; };
        EXPECT_NEAR(wasserstein_sup(shifted, 1e-12).value, v + 2.5, 1e-12);
    }
}

TEST(DualProperties, ObjectiveIsConvex)
{
    std::mt19937_64 rng(25);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int trial = 0; trial < 200; ++trial) {
        const DualInstance inst = random_instance(rng, 0.4, 2.0);
        double l1 = u(rng), l3 = u(rng);
        if (l1 > l3) {
            std::swap(l1, l3);
        }
        const double l2 = 0.5 * (l1 + l3);
        const double chord = 0.5 * (dual_objective(inst, l1) + dual_objective(inst, l3));
        EXPECT_LE(dual_objective(inst, l2), chord + 1e-12);
    }
}

TEST(DualProperties, SolverValueEqualsObjectiveAtMultiplier)
{
    std::mt19937_64 rng(26);
    for (int trial = 0; trial < 100; ++trial) {
        const DualInstance inst = random_instance(rng, 0.5, 2.0);
        const DualSolution s = wasserstein_sup(inst, 1e-12);
        ASSERT_TRUE(std::isfinite(s.lambda_star));
        EXPECT_NEAR(dual_objective(inst, s.lambda_star), s.value, 1e-12);
        for (double l : {0.0, 0.5 * s.lambda_star, 2.0 * s.lambda_star + 1.0}) {
            EXPECT_GE(dual_objective(inst, l), s.value - 1e-12);
        }
    }
}

TEST(DualSolver, TiesGoToCheaperMove)
{
    DualSolver solver;
    const double cost[] = {0.0, 1.0, 1.0, 4.0};
    const double gain[] = {0.0, 0.5, 0.5, 0.5};
    solver.add_atom(1.0, cost, gain, 4, 2.0);
    // Gain 0.5 costs 1; the equally good point at cost 4 never helps.
    EXPECT_NEAR(solver.solve(1.0, 2.0, 1e-12).value, 0.5, 1e-15);
    EXPECT_NEAR(solver.solve(0.5, 2.0, 1e-12).value, 0.125, 1e-15);

    const double bad_cost[] = {0.5, 1.0};
    EXPECT_THROW(solver.add_atom(1.0, bad_cost, gain, 2, 2.0), input_error);
}

TEST(CandidateOffsets, Lattice)
{
    const auto z = candidate_offsets(1, 0.2, 4.0, 4);
    ASSERT_EQ(z.size(), 33u);
    EXPECT_EQ(z[0][0], 0.0);
    EXPECT_NEAR(z.back()[0], 0.8, 1e-15);
    for (std::size_t k = 1; k < z.size(); ++k) {
        EXPECT_LE(std::abs(z[k - 1][0]), std::abs(z[k][0]) + 1e-15);
    }
    const auto z2 = candidate_offsets(2, 1.0, 2.0, 2);
    EXPECT_EQ(z2.size(), 1u + 4u * 8u);
    EXPECT_THROW(candidate_offsets(1, 0.0, 4.0, 4), input_error);
}

TEST(DualTrace, CsvLayout)
{
    const DualInstance inst = two_atom_instance(points({-1.0, 0.0}), points({1.0, 0.0}));
    std::stringstream ss;
    write_dual_trace_csv(ss, inst, {0.0, 1.0});
    std::string line;
    std::getline(ss, line);
    EXPECT_EQ(line, "lambda,objective");
    int rows = 0;
    while (std::getline(ss, line)) {
        ++rows;
    }
    EXPECT_EQ(rows, 2);
}
