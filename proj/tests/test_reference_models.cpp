#include <wdro/reference_models.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace wdro;

namespace {

ReferenceModel ou_2d()
{
    Matrix theta(2, 2);
    theta << 1.0, 0.3, 0.3, 0.5;
    Matrix sigma(2, 2);
    sigma << 0.8, 0.0, 0.2, 0.6;
    return ReferenceModel(ModelFamily::OrnsteinUhlenbeck,
                          {Action{"a", Point(), sigma, theta, make_point(0.2, -0.1)}});
}

ReferenceModel bm_2d()
{
    Matrix sigma(2, 2);
    sigma << 1.0, 0.0, 0.5, 0.7;
    return ReferenceModel(ModelFamily::BrownianDrift,
                          {Action{"a", make_point(0.3, -0.2), sigma, Matrix(), Point()}});
}

// Closed-form OU covariance in 1-d: s^2 (1 - e^{-2 theta t}) / (2 theta).
double ou_variance(double theta, double s, double t)
{
    return s * s * (1.0 - std::exp(-2.0 * theta * t)) / (2.0 * theta);
}

} // namespace

TEST(GaussHermite, MomentsOfStandardNormal)
{
    for (int order : {4, 8, 16, 32, 64}) {
        const auto& [x, w] = gauss_hermite(order);
        double m0 = 0, m1 = 0, m2 = 0, m4 = 0;
        for (int k = 0; k < order; ++k) {
            m0 += w[k];
            m1 += w[k] * x[k];
            m2 += w[k] * x[k] * x[k];
            m4 += w[k] * std::pow(x[k], 4);
        }
        EXPECT_NEAR(m0, 1.0, 1e-14);
        EXPECT_NEAR(m1, 0.0, 1e-14);
        EXPECT_NEAR(m2, 1.0, 1e-12);
        EXPECT_NEAR(m4, 3.0, 1e-10);
    }
}

TEST(Psi, Examples)
{
    const auto bm = ReferenceModel::brownian_1d({0.3}, {1.0});
    EXPECT_NEAR(psi(bm, 0, 2.0, make_point(1.0))[0], 1.6, 1e-15);

    const auto ou = ReferenceModel::ou_1d({1.0}, {0.0}, {1.0});
    EXPECT_NEAR(psi(ou, 0, std::log(2.0), make_point(4.0))[0], 2.0, 1e-14);

    for (const auto& m : {bm, ou, ou_2d(), bm_2d()}) {
        const Point x = m.dim() == 1 ? make_point(0.7) : make_point(0.7, -1.3);
        EXPECT_EQ(psi(m, 0, 0.0, x), x);
    }
}

TEST(Psi, OuWithZeroEigenvalueUsesLinearLimit)
{
    const auto ou = ReferenceModel::ou_1d({0.0}, {0.5}, {1.0});
    EXPECT_NEAR(psi(ou, 0, 2.0, make_point(1.0))[0], 2.0, 1e-15);
    const auto ou2 = ReferenceModel::ou_1d({2.0}, {0.5}, {1.0});
    const double t = 0.7;
    const double expect = std::exp(-2.0 * t) * 1.0 + 0.5 * (1.0 - std::exp(-2.0 * t)) / 2.0;
    EXPECT_NEAR(psi(ou2, 0, t, make_point(1.0))[0], expect, 1e-15);
}

TEST(Psi, NegativeTimeIsInputError)
{
    const auto bm = ReferenceModel::brownian_1d({0.3}, {1.0});
    EXPECT_THROW(psi(bm, 0, -0.1, make_point(0.0)), input_error);
    EXPECT_THROW(law(bm, 0, -0.1, 16), input_error);
}

TEST(Psi, OneLipschitzAndLinearGrowth)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-5.0, 5.0), ut(0.0, 2.0);
    for (const auto& m : {ReferenceModel::brownian_1d({0.3, -1.0}, {1.0, 0.5}),
                          ReferenceModel::ou_1d({1.0, 0.2}, {0.5, -0.3}, {1.0, 1.0}), ou_2d(),
                          bm_2d()}) {
        const double c = m.drift_constant();
        for (int k = 0; k < 200; ++k) {
            Point x1(m.dim()), x2(m.dim());
            for (int i = 0; i < m.dim(); ++i) {
                x1[i] = u(rng);
                x2[i] = u(rng);
            }
            const double t = ut(rng);
            const std::size_t a = k % m.action_count();
            EXPECT_LE((m.psi(a, t, x1) - m.psi(a, t, x2)).norm(), (x1 - x2).norm() + 1e-12);
            EXPECT_LE((m.psi(a, t, x1) - x1).norm(), t * c * (1.0 + x1.norm()) + 1e-12);
        }
    }
}

TEST(Law, DiracAtTimeZero)
{
    const auto bm = ReferenceModel::brownian_1d({0.3}, {1.0});
    const DiscreteMeasure d = law(bm, 0, 0.0, 16);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_EQ(d.atoms[0][0], 0.0);
    EXPECT_EQ(d.weights[0], 1.0);
    EXPECT_EQ(law(ou_2d(), 0, 0.0, 8).size(), 1u);
}

TEST(Law, BrownianMoments)
{
    const auto bm = ReferenceModel::brownian_1d({0.0}, {1.0});
    const DiscreteMeasure d = law(bm, 0, 1.0, 16);
    EXPECT_NEAR(d.mean()[0], 0.0, 1e-12);
    EXPECT_NEAR(d.covariance()(0, 0), 1.0, 1e-10);
    EXPECT_NEAR(law(bm, 0, 0.25, 16).covariance()(0, 0), 0.25, 1e-10);
}

TEST(Law, CovarianceMatchesClosedForm)
{
    const auto ou = ReferenceModel::ou_1d({0.7}, {0.2}, {1.3});
    for (int q : {8, 16, 32}) {
        for (double t : {0.01, 0.5, 2.0}) {
            const DiscreteMeasure d = law(ou, 0, t, q);
            EXPECT_NEAR(d.mean()[0], 0.0, 1e-12);
            EXPECT_NEAR(d.covariance()(0, 0), ou_variance(0.7, 1.3, t), 1e-8);
        }
    }
    for (const auto& m : {ou_2d(), bm_2d()}) {
        for (double t : {0.1, 1.0}) {
            const DiscreteMeasure d = law(m, 0, t, 8);
            EXPECT_EQ(d.size(), 64u);
            EXPECT_LT((d.covariance() - m.covariance(0, t)).cwiseAbs().maxCoeff(), 1e-8);
            EXPECT_LT(d.mean().norm(), 1e-12);
        }
    }
}

TEST(Law, OuCovarianceAgainstNumericalIntegral)
{
    const ReferenceModel m = ou_2d();
    const double t = 0.8;
    const Matrix theta = m.action(0).theta;
    const Matrix s = m.diffusion(0);
    // trapezoid on int_0^t e^{-theta u} S e^{-theta u} du with the matrix exponential by eigenpairs
    Eigen::SelfAdjointEigenSolver<Matrix> es(theta);
    auto expm = [&](double u) {
        Matrix d = Matrix::Zero(2, 2);
        for (int k = 0; k < 2; ++k) {
            d(k, k) = std::exp(-es.eigenvalues()[k] * u);
        }
        return Matrix(es.eigenvectors() * d * es.eigenvectors().transpose());
    };
    const int steps = 4000;
    Matrix acc = Matrix::Zero(2, 2);
    for (int i = 0; i <= steps; ++i) {
        const double u = t * i / steps;
        const double w = (i == 0 || i == steps) ? 0.5 : 1.0;
        acc += w * expm(u) * s * expm(u);
    }
    acc *= t / steps;
    EXPECT_LT((acc - m.covariance(0, t)).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(Law, DegenerateDiffusionGivesSingleAtom)
{
    const auto det = ReferenceModel::brownian_1d({1.0}, {0.0});
    const DiscreteMeasure d = law(det, 0, 0.5, 16);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_EQ(d.atoms[0][0], 0.0);

    Matrix sigma(2, 2);
    sigma << 1.0, 0.0, 0.0, 0.0;
    const ReferenceModel half(ModelFamily::BrownianDrift,
                              {Action{"a", make_point(0.0, 0.0), sigma, Matrix(), Point()}});
    const DiscreteMeasure h = law(half, 0, 1.0, 8);
    EXPECT_EQ(h.size(), 8u);
    EXPECT_NEAR(h.covariance()(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(h.covariance()(1, 1), 0.0, 1e-15);
}

TEST(Law, QuadOrderRange)
{
    const auto bm = ReferenceModel::brownian_1d({0.0}, {1.0});
    EXPECT_THROW(law(bm, 0, 1.0, 3), input_error);
    EXPECT_THROW(law(bm, 0, 1.0, 65), input_error);
}

TEST(Law, SmallTimeMomentScaling)
{
    const double t = 1e-3;
    for (double p : {1.5, 2.0, 3.0}) {
        for (const auto& m : {ReferenceModel::brownian_1d({0.5, -0.5}, {1.0, 2.0}),
                              ReferenceModel::ou_1d({1.0}, {0.0}, {1.5}), ou_2d()}) {
            for (std::size_t a = 0; a < m.action_count(); ++a) {
                const DiscreteMeasure d = law(m, a, t, 16);
                // E||N(0, Sigma_1)||^p with Sigma_1 the unit-time diffusion bounds the scaled moment
                const DiscreteMeasure unit = law(ReferenceModel(ModelFamily::BrownianDrift,
                                                                {Action{"u", Point::Zero(m.dim()),
                                                                        m.action(a).sigma, Matrix(),
                                                                        Point()}}),
                                                 0, 1.0, 16);
                EXPECT_LE(d.moment(p), 10.0 * std::pow(t, p / 2.0) * unit.moment(p));
            }
        }
    }
}

TEST(Model, RejectsInvalidParameters)
{
    EXPECT_THROW(ReferenceModel(ModelFamily::BrownianDrift, {}), model_error);
    EXPECT_THROW(ReferenceModel::ou_1d({-1.0}, {0.0}, {1.0}), model_error);
    Matrix theta(2, 2);
    theta << 1.0, 0.5, 0.0, 1.0;
    EXPECT_THROW(ReferenceModel(ModelFamily::OrnsteinUhlenbeck,
                                {Action{"a", Point(), Matrix::Identity(2, 2), theta,
                                        make_point(0.0, 0.0)}}),
                 model_error);
    EXPECT_THROW(ReferenceModel(ModelFamily::BrownianDrift,
                                {Action{"a", make_point(0.0), Matrix::Identity(2, 2), Matrix(),
                                        Point()}}),
                 model_error);
}

TEST(ChapmanKolmogorov, TrivialSplits)
{
    const Grid g = Grid::line(-8.0, 8.0, 513);
    const ScalarField f = ScalarField::sample(g, [](const Point& x) { return std::tanh(x[0]); });
    const auto bm = ReferenceModel::brownian_1d({0.3}, {1.0});
    EXPECT_LE(check_chapman_kolmogorov(bm, 0, 0.0, 0.7, f, make_point(0.2)), 1e-10);
    EXPECT_LE(check_chapman_kolmogorov(bm, 0, 0.7, 0.0, f, make_point(0.2)), 1e-10);
}

TEST(ChapmanKolmogorov, BrownianCosine)
{
    const auto bm = ReferenceModel::brownian_1d({0.0}, {1.0});
    // At n = 1025 the residual is bounded by the interpolation error of both sides.
    const Grid g = Grid::line(-8.0, 8.0, 1025);
    const ScalarField f = ScalarField::sample(g, [](const Point& x) { return std::cos(x[0]); });
    const double h = g.spacing(0);
    EXPECT_LE(check_chapman_kolmogorov(bm, 0, 0.5, 0.5, f, make_point(0.0), 32), h * h / 4.0);
    // The 1e-6 level needs a finer grid.
    const Grid fine = Grid::line(-8.0, 8.0, 4097);
    const ScalarField ff = ScalarField::sample(fine, [](const Point& x) { return std::cos(x[0]); });
    EXPECT_LE(check_chapman_kolmogorov(bm, 0, 0.5, 0.5, ff, make_point(0.0), 32), 1e-6);
}

TEST(ChapmanKolmogorov, OuTanh)
{
    const auto ou = ReferenceModel::ou_1d({1.0}, {0.2}, {0.8});
    const Grid g = Grid::line(-8.0, 8.0, 513);
    const ScalarField f = ScalarField::sample(g, [](const Point& x) { return std::tanh(x[0]); });
    EXPECT_LE(check_chapman_kolmogorov(ou, 0, 0.25, 0.75, f, make_point(0.3), 32), 1e-4);
}

TEST(PsiStability, Examples)
{
    const auto bm = ReferenceModel::brownian_1d({1.0}, {1.0});
    const auto r1 = check_psi_stability(bm, 1.0, 2.0);
    EXPECT_NEAR(r1.t0, 1.0 / 3.0, 1e-15);
    EXPECT_TRUE(r1.passed);

    const auto still = ReferenceModel::brownian_1d({0.0}, {1.0});
    const auto r2 = check_psi_stability(still, 0.0, 1.0);
    EXPECT_TRUE(std::isinf(r2.t0));
    EXPECT_TRUE(r2.passed);

    const auto ou = ReferenceModel::ou_1d({1.0}, {0.0}, {1.0});
    const auto r3 = check_psi_stability(ou, 1.0, 2.0, 100);
    EXPECT_GT(r3.t0, 0.0);
    EXPECT_TRUE(r3.passed);
    EXPECT_EQ(r3.samples, 100);

    EXPECT_TRUE(check_psi_stability(ou_2d(), 0.5, 3.0).passed);
    EXPECT_THROW(check_psi_stability(bm, 2.0, 2.0), input_error);
}
