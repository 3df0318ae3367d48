/**
 * @file reference_models.hpp
 * @brief Controlled reference dynamics X_t = psi_t^a(x) + Y_t^a with Gaussian Y.
 *
 * Two families are built in: Brownian motion with drift and the
 * Ornstein-Uhlenbeck process. Both give a 1-Lipschitz flow psi (rate c = 0)
 * and Gaussian laws mu_t^a, which are represented by tensor Gauss-Hermite
 * quadrature.
 */
#pragma once

#include <wdro/errors.hpp>
#include <wdro/field_grid.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace wdro {

/// Matrix of size at most 2x2; stack allocated.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 2, 2>;

enum class ModelFamily { BrownianDrift, OrnsteinUhlenbeck };

inline const char* family_name(ModelFamily f)
{
    return f == ModelFamily::BrownianDrift ? "brownian_drift" : "ornstein_uhlenbeck";
}

/**
 * Per-action parameters. BrownianDrift reads (b, sigma); OrnsteinUhlenbeck
 * reads (theta, kappa, sigma).
 */
struct Action {
    std::string label;
    Point b;
    Matrix sigma;
    Matrix theta;
    Point kappa;
};

/// Finite atoms with probability weights.
struct DiscreteMeasure {
    std::vector<Point> atoms;
    std::vector<double> weights;

    std::size_t size() const { return atoms.size(); }

    void validate() const
    {
        detail::require(!atoms.empty() && atoms.size() == weights.size(),
                        "measure: need matching nonempty atoms and weights");
        double total = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            detail::require(weights[i] >= 0.0, "measure: negative weight");
            detail::require(atoms[i].allFinite(), "measure: non-finite atom");
            total += weights[i];
        }
        detail::require(std::abs(total - 1.0) <= 1e-12, "measure: weights must sum to 1");
    }

    Point mean() const
    {
        Point m = Point::Zero(atoms.front().size());
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            m += weights[i] * atoms[i];
        }
        return m;
    }

    Matrix covariance() const
    {
        const Point m = mean();
        const auto d = atoms.front().size();
        Matrix c = Matrix::Zero(d, d);
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            const Point z = atoms[i] - m;
            c += weights[i] * z * z.transpose();
        }
        return c;
    }

    /// int ||y||^p d(measure)
    double moment(double p) const
    {
        double s = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            s += weights[i] * std::pow(atoms[i].norm(), p);
        }
        return s;
    }

    static DiscreteMeasure dirac(int dim)
    {
        return DiscreteMeasure{{Point::Zero(dim)}, {1.0}};
    }
};

/**
 * Probabilists' Gauss-Hermite rule (weight exp(-x^2/2)), weights normalised
 * to sum to one, so that sum w_k g(x_k) approximates E g(W), W ~ N(0,1).
 *
 * Golub-Welsch on the symmetric Jacobi matrix; nodes and weights are
 * symmetrised so odd moments vanish to rounding.
 */
inline const std::pair<std::vector<double>, std::vector<double>>& gauss_hermite(int order)
{
    detail::require(order >= 1 && order <= 128, "gauss_hermite: order out of range");
    static std::mutex mutex;
    static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(order);
    if (it != cache.end()) {
        return it->second;
    }

    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    std::vector<double> x(order), w(order);
    for (int k = 0; k < order; ++k) {
        x[k] = es.eigenvalues()[k];
        const double v = es.eigenvectors()(0, k);
        w[k] = v * v;
    }
    for (int k = 0; k < order / 2; ++k) {
        const int j = order - 1 - k;
        const double xs = 0.5 * (x[j] - x[k]);
        const double ws = 0.5 * (w[j] + w[k]);
        x[k] = -xs;
        x[j] = xs;
        w[k] = w[j] = ws;
    }
    if (order % 2 == 1) {
        x[order / 2] = 0.0;
    }
    double total = 0.0;
    for (double v : w) {
        total += v;
    }
    for (double& v : w) {
        v /= total;
    }
    return cache.emplace(order, std::make_pair(std::move(x), std::move(w))).first->second;
}

/**
 * Reference model: family tag plus a finite, nonempty action list.
 */
class ReferenceModel {
public:
    ReferenceModel(ModelFamily family, std::vector<Action> actions)
        : family_(family), actions_(std::move(actions))
    {
        if (actions_.empty()) {
            throw model_error("model: action set must be nonempty");
        }
        dim_ = static_cast<int>(actions_.front().sigma.rows());
        if (dim_ != 1 && dim_ != 2) {
            throw model_error("model: dimension must be 1 or 2");
        }
        for (auto& a : actions_) {
            check_action(a);
            if (family_ == ModelFamily::OrnsteinUhlenbeck) {
                Eigen::SelfAdjointEigenSolver<Matrix> es(a.theta);
                eig_vectors_.push_back(es.eigenvectors());
                eig_values_.push_back(es.eigenvalues().cwiseMax(0.0));
            }
        }
    }

    /// Convenience: 1-d Brownian motion with drifts b_k and volatilities s_k.
    static ReferenceModel brownian_1d(const std::vector<double>& drifts,
                                      const std::vector<double>& vols)
    {
        detail::require(drifts.size() == vols.size(), "brownian_1d: size mismatch");
        std::vector<Action> acts;
        for (std::size_t k = 0; k < drifts.size(); ++k) {
            acts.push_back(Action{"a" + std::to_string(k), make_point(drifts[k]),
                                  Matrix::Constant(1, 1, vols[k]), Matrix(), Point()});
        }
        return ReferenceModel(ModelFamily::BrownianDrift, std::move(acts));
    }

    /// Convenience: 1-d OU with scalar theta, kappa, sigma per action.
    static ReferenceModel ou_1d(const std::vector<double>& thetas,
                                const std::vector<double>& kappas,
                                const std::vector<double>& vols)
    {
        detail::require(thetas.size() == kappas.size() && kappas.size() == vols.size(),
                        "ou_1d: size mismatch");
        std::vector<Action> acts;
        for (std::size_t k = 0; k < thetas.size(); ++k) {
            acts.push_back(Action{"a" + std::to_string(k), Point(), Matrix::Constant(1, 1, vols[k]),
                                  Matrix::Constant(1, 1, thetas[k]), make_point(kappas[k])});
        }
        return ReferenceModel(ModelFamily::OrnsteinUhlenbeck, std::move(acts));
    }

    ModelFamily family() const { return family_; }
    int dim() const { return dim_; }
    std::size_t action_count() const { return actions_.size(); }
    const Action& action(std::size_t a) const { return actions_.at(a); }
    const std::vector<Action>& actions() const { return actions_; }

    /// Lipschitz rate c of psi_t (||psi_t||_Lip <= e^{ct}); zero for both families.
    double lipschitz_rate() const { return 0.0; }

    /**
     * Constant C with ||psi_t^a(x) - x|| <= t C (1 + ||x||):
     * max ||b(a)|| for BrownianDrift, max(||theta(a)||, ||kappa(a)||) for OU.
     */
    double drift_constant() const
    {
        double c = 0.0;
        for (const auto& a : actions_) {
            if (family_ == ModelFamily::BrownianDrift) {
                c = std::max(c, a.b.norm());
            } else {
                const double theta_norm = a.theta.jacobiSvd().singularValues()(0);
                c = std::max({c, theta_norm, a.kappa.norm()});
            }
        }
        return c;
    }

    /// Vector field generating psi^a: b(a), or -theta(a) x + kappa(a).
    Point velocity(std::size_t a, const Point& x) const
    {
        const Action& act = actions_.at(a);
        if (family_ == ModelFamily::BrownianDrift) {
            return act.b;
        }
        return -act.theta * x + act.kappa;
    }

    /// sigma(a) sigma(a)^T
    Matrix diffusion(std::size_t a) const
    {
        const Action& act = actions_.at(a);
        return act.sigma * act.sigma.transpose();
    }

    Point psi(std::size_t a, double t, const Point& x) const
    {
        detail::require(t >= 0.0 && std::isfinite(t), "psi: require t >= 0");
        detail::require(x.size() == dim_, "psi: point dimension mismatch");
        const Action& act = actions_.at(a);
        if (t == 0.0) {
            return x;
        }
        if (family_ == ModelFamily::BrownianDrift) {
            return x + act.b * t;
        }
        const Matrix& v = eig_vectors_[a];
        const Point& lam = eig_values_[a];
        Point xe = v.transpose() * x;
        Point ke = v.transpose() * act.kappa;
        for (int k = 0; k < dim_; ++k) {
            xe[k] = std::exp(-lam[k] * t) * xe[k] + decay_integral(lam[k], t) * ke[k];
        }
        return v * xe;
    }

    /// Covariance of Y_t^a in closed form.
    Matrix covariance(std::size_t a, double t) const
    {
        detail::require(t >= 0.0 && std::isfinite(t), "covariance: require t >= 0");
        const Matrix s = diffusion(a);
        if (family_ == ModelFamily::BrownianDrift) {
            return s * t;
        }
        const Matrix& v = eig_vectors_[a];
        const Point& lam = eig_values_[a];
        Matrix se = v.transpose() * s * v;
        for (int i = 0; i < dim_; ++i) {
            for (int j = 0; j < dim_; ++j) {
                se(i, j) *= decay_integral(lam[i] + lam[j], t);
            }
        }
        Matrix out = v * se * v.transpose();
        return 0.5 * (out + out.transpose());
    }

    /**
     * Gauss-Hermite representation of mu_t^a.
     *
     * Atoms are the tensor rule mapped through the symmetric square root of
     * the covariance; directions with zero variance are dropped, so a
     * degenerate law yields fewer atoms and t = 0 yields the single atom 0.
     */
    DiscreteMeasure law(std::size_t a, double t, int quad_order) const
    {
        detail::require(t >= 0.0, "law: require t >= 0");
        detail::require(quad_order >= 4 && quad_order <= 64, "law: quad_order must lie in [4, 64]");
        if (t == 0.0) {
            return DiscreteMeasure::dirac(dim_);
        }
        const Matrix cov = covariance(a, t);
        if (!cov.allFinite()) {
            throw model_error("law: non-finite covariance");
        }
        Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
        const double top = es.eigenvalues().cwiseAbs().maxCoeff();
        if (es.eigenvalues().minCoeff() < -1e-10 * std::max(top, 1e-300)) {
            throw model_error("law: covariance is not positive semi-definite");
        }
        std::vector<Point> dirs;
        for (int k = 0; k < dim_; ++k) {
            const double lam = es.eigenvalues()[k];
            if (top > 0.0 && lam > 1e-12 * top) {
                dirs.push_back(std::sqrt(lam) * es.eigenvectors().col(k));
            }
        }
        if (dirs.empty()) {
            return DiscreteMeasure::dirac(dim_);
        }
        const auto& [nodes, weights] = gauss_hermite(quad_order);
        DiscreteMeasure out;
        if (dirs.size() == 1) {
            for (int i = 0; i < quad_order; ++i) {
                out.atoms.push_back(nodes[i] * dirs[0]);
                out.weights.push_back(weights[i]);
            }
        } else {
            for (int j = 0; j < quad_order; ++j) {
                for (int i = 0; i < quad_order; ++i) {
                    out.atoms.push_back(nodes[i] * dirs[0] + nodes[j] * dirs[1]);
                    out.weights.push_back(weights[i] * weights[j]);
                }
            }
        }
        return out;
    }

private:
    // int_0^t e^{-mu s} ds, with the t limit at mu = 0.
    static double decay_integral(double mu, double t)
    {
        if (mu <= 0.0) {
            return t;
        }
        return -std::expm1(-mu * t) / mu;
    }

    void check_action(const Action& a) const
    {
        auto square = [this](const Matrix& m) { return m.rows() == dim_ && m.cols() == dim_; };
        if (!square(a.sigma) || !a.sigma.allFinite()) {
            throw model_error("model: sigma must be a finite " + std::to_string(dim_) + "x" +
                              std::to_string(dim_) + " matrix");
        }
        if (family_ == ModelFamily::BrownianDrift) {
            if (a.b.size() != dim_ || !a.b.allFinite()) {
                throw model_error("model: drift b must be a finite vector of the model dimension");
            }
            return;
        }
        if (!square(a.theta) || !a.theta.allFinite() || a.kappa.size() != dim_ ||
            !a.kappa.allFinite()) {
            throw model_error("model: theta/kappa have wrong shape or non-finite entries");
        }
        if ((a.theta - a.theta.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
            throw model_error("model: theta must be symmetric");
        }
        Eigen::SelfAdjointEigenSolver<Matrix> es(a.theta);
        if (es.eigenvalues().minCoeff() < -1e-12) {
            throw model_error("model: theta must be positive semi-definite");
        }
    }

    ModelFamily family_;
    std::vector<Action> actions_;
    int dim_ = 1;
    std::vector<Matrix> eig_vectors_;
    std::vector<Point> eig_values_;
};

inline Point psi(const ReferenceModel& model, std::size_t a, double t, const Point& x)
{
    return model.psi(a, t, x);
}

inline DiscreteMeasure law(const ReferenceModel& model, std::size_t a, double t, int quad_order)
{
    return model.law(a, t, quad_order);
}

/**
 * Residual of the Chapman-Kolmogorov identity at x:
 * | E f(psi_{s+t}(x) + Y_{s+t}) - E E f(psi_s(psi_t(x) + Y_t) + Y_s) |.
 */
inline double check_chapman_kolmogorov(const ReferenceModel& model, std::size_t a, double s,
                                       double t, const ScalarField& f, const Point& x,
                                       int quad_order = 32)
{
    detail::require(s >= 0.0 && t >= 0.0, "chapman_kolmogorov: require s, t >= 0");
    const DiscreteMeasure whole = model.law(a, s + t, quad_order);
    const Point base = model.psi(a, s + t, x);
    double lhs = 0.0;
    for (std::size_t i = 0; i < whole.size(); ++i) {
        lhs += whole.weights[i] * f.eval(base + whole.atoms[i]);
    }
    const DiscreteMeasure first = model.law(a, t, quad_order);
    const DiscreteMeasure second = model.law(a, s, quad_order);
    const Point mid = model.psi(a, t, x);
    double rhs = 0.0;
    for (std::size_t i = 0; i < first.size(); ++i) {
        const Point y = model.psi(a, s, mid + first.atoms[i]);
        double inner = 0.0;
        for (std::size_t j = 0; j < second.size(); ++j) {
            inner += second.weights[j] * f.eval(y + second.atoms[j]);
        }
        rhs += first.weights[i] * inner;
    }
    return std::abs(lhs - rhs);
}

struct PsiStabilityResult {
    double t0 = 0.0;          ///< (R'-R)/(C(1+R')), +inf when C = 0
    bool passed = false;
    double worst_margin = 0.0; ///< min over samples of inf_a ||psi_t(x)|| - R
    int samples = 0;
};

/**
 * Computes t0 for the flow-stability estimate and checks, on seeded samples
 * x with ||x|| >= R' and t in [0, t0], that inf_a ||psi_t^a(x)|| >= R.
 */
inline PsiStabilityResult check_psi_stability(const ReferenceModel& model, double r, double r_prime,
                                              int samples = 100, std::uint64_t seed = 7)
{
    detail::require(r >= 0.0 && r_prime > r, "psi_stability: require R' > R >= 0");
    const double c = model.drift_constant();
    PsiStabilityResult out;
    out.t0 = c > 0.0 ? (r_prime - r) / (c * (1.0 + r_prime))
                     : std::numeric_limits<double>::infinity();
    const double t_max = std::isfinite(out.t0) ? out.t0 : 10.0;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    out.worst_margin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < samples; ++k) {
        Point dir(model.dim());
        for (int i = 0; i < model.dim(); ++i) {
            dir[i] = gauss(rng);
        }
        if (dir.norm() == 0.0) {
            dir[0] = 1.0;
        }
        dir.normalize();
        // radii in [R', 3R' + 1], times in [0, t0], both endpoints visited
        const double radius = k == 0 ? r_prime : r_prime + unit(rng) * (2.0 * r_prime + 1.0);
        const double t = k == 1 ? t_max : unit(rng) * t_max;
        const Point x = radius * dir;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < model.action_count(); ++a) {
            best = std::min(best, model.psi(a, t, x).norm());
        }
        out.worst_margin = std::min(out.worst_margin, best - r);
        ++out.samples;
    }
    out.passed = out.worst_margin >= -1e-12;
    return out;
}

} // namespace wdro
