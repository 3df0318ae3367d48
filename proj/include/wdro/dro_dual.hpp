/**
 * @file dro_dual.hpp
 * @brief Worst case of int g dnu over a p-Wasserstein ball around a discrete measure.
 *
 * With destinations restricted to finite candidate sets Z_i around each
 * source atom y_i, the primal problem
 *
 *   sup  sum_i w_i sum_j t_ij g(z_ij)
 *   s.t. sum_j t_ij = 1,  t >= 0,  sum_ij w_i t_ij ||z_ij - y_i||^p <= r^p
 *
 * is a finite LP whose dual is the one-dimensional convex problem
 *
 *   min_{lambda >= 0}  lambda r^p + sum_i w_i max_j [ g(z_ij) - lambda ||z_ij - y_i||^p ].
 *
 * The dual objective is piecewise linear in lambda. It is minimised exactly
 * over the upper concave envelope of each atom's (cost, gain) cloud.
 */
#pragma once

#include <wdro/errors.hpp>
#include <wdro/field_grid.hpp>
#include <wdro/reference_models.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <vector>

namespace wdro {

/// Wasserstein order p and uncertainty rate m; the ball at horizon t has radius t m.
struct AmbiguitySpec {
    double m = 0.0;
    double p = 2.0;

    void validate() const
    {
        detail::require(std::isfinite(m) && m >= 0.0, "ambiguity: require m >= 0");
        detail::require(std::isfinite(p) && p > 1.0, "ambiguity: require p > 1");
    }

    double radius(double t) const { return t * m; }
};

/// Sup over the ball of a discrete measure with finite destination sets.
struct DualInstance {
    DiscreteMeasure source;
    /// Z_i; each must contain source.atoms[i] itself.
    std::vector<std::vector<Point>> candidates;
    std::function<double(const Point&)> integrand;
    double radius = 0.0;
    double order = 2.0;

    void validate() const
    {
        source.validate();
        detail::require(candidates.size() == source.size(), "dual: one candidate set per atom");
        detail::require(static_cast<bool>(integrand), "dual: missing integrand");
        detail::require(std::isfinite(radius) && radius >= 0.0, "dual: require radius >= 0");
        detail::require(std::isfinite(order) && order > 1.0, "dual: require order p > 1");
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            const auto& z = candidates[i];
            const bool has_stay = std::any_of(z.begin(), z.end(), [&](const Point& c) {
                return c.size() == source.atoms[i].size() && c == source.atoms[i];
            });
            detail::require(has_stay, "dual: candidate set must contain its source atom");
        }
    }

    std::size_t total_candidates() const
    {
        std::size_t n = 0;
        for (const auto& z : candidates) {
            n += z.size();
        }
        return n;
    }
};

struct DualSolution {
    double value = 0.0;
    /// Minimising multiplier; +infinity when r = 0 (the ball is a single point).
    double lambda_star = 0.0;
    int iterations = 0;
};

/**
 * Exact minimiser of the piecewise-linear dual over per-atom upper hulls.
 *
 * Usage: add_atom() once per source atom with its candidates listed in
 * nondecreasing cost order (the zero-cost stay option first), then solve().
 */
class DualSolver {
public:
    void clear()
    {
        weight_.clear();
        offset_.assign(1, 0);
        cost_.clear();
        gain_.clear();
        stay_gain_.clear();
        lipschitz_ = 0.0;
    }

    DualSolver() { clear(); }

    /**
     * Adds an atom. Candidates with equal cost must be adjacent; only the
     * best gain of an equal-cost run survives, and points that cost more but
     * gain no more are dropped (ties go to the cheaper move).
     */
    void add_atom(double weight, const double* cost, const double* gain, std::size_t count,
                  double order)
    {
        if (count == 0 || cost[0] != 0.0) {
            throw input_error("dual: every atom needs its zero-cost stay option first");
        }
        double stay = gain[0];
        for (std::size_t k = 1; k < count && cost[k] == 0.0; ++k) {
            stay = std::max(stay, gain[k]);
        }
        weight_.push_back(weight);
        stay_gain_.push_back(stay);

        const std::size_t start = cost_.size();
        std::size_t i = 0;
        while (i < count) {
            const double c = cost[i];
            double g = gain[i];
            std::size_t j = i + 1;
            while (j < count && cost[j] == c) {
                g = std::max(g, gain[j]);
                ++j;
            }
            i = j;
            if (!std::isfinite(g)) {
                throw data_error("dual: non-finite integrand value");
            }
            if (cost_.size() > start && g <= gain_.back()) {
                continue;
            }
            while (cost_.size() - start >= 2) {
                const std::size_t e = cost_.size();
                const double c0 = cost_[e - 2], g0 = gain_[e - 2];
                const double c1 = cost_[e - 1], g1 = gain_[e - 1];
                if ((g1 - g0) * (c - c0) <= (g - g0) * (c1 - c0)) {
                    cost_.pop_back();
                    gain_.pop_back();
                } else {
                    break;
                }
            }
            cost_.push_back(c);
            gain_.push_back(g);
        }
        offset_.push_back(cost_.size());

        for (std::size_t k = start + 1; k < cost_.size(); ++k) {
            const double dist = std::pow(cost_[k], 1.0 / order);
            lipschitz_ = std::max(lipschitz_, (gain_[k] - gain_[start]) / dist);
        }
    }

    std::size_t atom_count() const { return weight_.size(); }

    /// Dual objective lambda r^p + sum_i w_i max_k (g_k - lambda c_k) on the hulls.
    double objective(double lambda, double rp) const
    {
        double s = lambda * rp;
        for (std::size_t i = 0; i < weight_.size(); ++i) {
            const std::size_t k = argmax(i, lambda);
            s += weight_[i] * (gain_[k] - lambda * cost_[k]);
        }
        return s;
    }

    /// Right derivative r^p - sum_i w_i c_i(lambda) of the dual objective.
    double right_slope(double lambda, double rp) const
    {
        double s = rp;
        for (std::size_t i = 0; i < weight_.size(); ++i) {
            s -= weight_[i] * cost_[argmax(i, lambda)];
        }
        return s;
    }

    DualSolution solve(double radius, double order, double tol) const
    {
        detail::require(tol > 0.0, "wasserstein_sup: require tol > 0");
        DualSolution out;
        if (radius == 0.0) {
            double s = 0.0;
            for (std::size_t i = 0; i < weight_.size(); ++i) {
                s += weight_[i] * stay_gain_[i];
            }
            out.value = s;
            out.lambda_star = std::numeric_limits<double>::infinity();
            return out;
        }
        const double rp = std::pow(radius, order);
        if (right_slope(0.0, rp) >= 0.0) {
            out.value = objective(0.0, rp);
            out.lambda_star = 0.0;
            return out;
        }

        double lo = 0.0;
        double hi = lipschitz_ / (order * std::pow(std::max(radius, 1e-12), order - 1.0)) + 1.0;
        while (right_slope(hi, rp) < 0.0) {
            lo = hi;
            hi *= 2.0;
            ++out.iterations;
            if (!std::isfinite(hi)) {
                throw data_error("wasserstein_sup: multiplier bracket diverged");
            }
        }
        while (hi - lo > tol * hi && out.iterations < 400) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) {
                break;
            }
            if (right_slope(mid, rp) >= 0.0) {
                hi = mid;
            } else {
                lo = mid;
            }
            ++out.iterations;
        }

        // The minimiser is lo, hi, or a hull breakpoint between them.
        out.value = objective(hi, rp);
        out.lambda_star = hi;
        auto consider = [&](double lambda) {
            const double v = objective(lambda, rp);
            if (v < out.value) {
                out.value = v;
                out.lambda_star = lambda;
            }
        };
        consider(lo);
        for (std::size_t i = 0; i < weight_.size(); ++i) {
            for (std::size_t k = offset_[i]; k + 1 < offset_[i + 1]; ++k) {
                const double s = (gain_[k + 1] - gain_[k]) / (cost_[k + 1] - cost_[k]);
                if (s > lo && s < hi) {
                    consider(s);
                }
            }
        }
        return out;
    }

private:
    // First hull vertex whose outgoing slope is <= lambda (cheapest maximiser).
    std::size_t argmax(std::size_t atom, double lambda) const
    {
        std::size_t k = offset_[atom];
        const std::size_t last = offset_[atom + 1] - 1;
        while (k < last && gain_[k + 1] - gain_[k] > lambda * (cost_[k + 1] - cost_[k])) {
            ++k;
        }
        return k;
    }

    std::vector<double> weight_;
    std::vector<std::size_t> offset_;
    std::vector<double> cost_, gain_;
    std::vector<double> stay_gain_;
    double lipschitz_ = 0.0;
};

namespace detail {

inline void load_instance(const DualInstance& inst, DualSolver& solver)
{
    inst.validate();
    solver.clear();
    std::vector<std::pair<double, double>> cg;
    std::vector<double> cost, gain;
    for (std::size_t i = 0; i < inst.source.size(); ++i) {
        const Point& y = inst.source.atoms[i];
        cg.clear();
        for (const Point& z : inst.candidates[i]) {
            const double g = inst.integrand(z);
            if (!std::isfinite(g)) {
                throw data_error("wasserstein_sup: non-finite integrand value");
            }
            cg.emplace_back(std::pow((z - y).norm(), inst.order), g);
        }
        std::stable_sort(cg.begin(), cg.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        cost.clear();
        gain.clear();
        for (const auto& [c, g] : cg) {
            cost.push_back(c);
            gain.push_back(g);
        }
        solver.add_atom(inst.source.weights[i], cost.data(), gain.data(), cost.size(),
                        inst.order);
    }
}

} // namespace detail

/// lambda r^p + sum_i w_i max_{z in Z_i} [ g(z) - lambda ||z - y_i||^p ], evaluated directly.
inline double dual_objective(const DualInstance& inst, double lambda)
{
    inst.validate();
    detail::require(lambda >= 0.0, "dual_objective: require lambda >= 0");
    double s = lambda * std::pow(inst.radius, inst.order);
    for (std::size_t i = 0; i < inst.source.size(); ++i) {
        double best = -std::numeric_limits<double>::infinity();
        for (const Point& z : inst.candidates[i]) {
            const double cost = std::pow((z - inst.source.atoms[i]).norm(), inst.order);
            best = std::max(best, inst.integrand(z) - lambda * cost);
        }
        s += inst.source.weights[i] * best;
    }
    return s;
}

/// Worst-case (sup) value over the ball; exact for the finite candidate sets.
inline DualSolution wasserstein_sup(const DualInstance& inst, double tol)
{
    detail::require(tol > 0.0, "wasserstein_sup: require tol > 0");
    DualSolver solver;
    detail::load_instance(inst, solver);
    return solver.solve(inst.radius, inst.order, tol);
}

/// Best-case (inf) value over the ball, via the sup of the negated integrand.
inline double wasserstein_inf(const DualInstance& inst, double tol)
{
    DualInstance neg = inst;
    neg.integrand = [g = inst.integrand](const Point& z) { return -g(z); };
    return -wasserstein_sup(neg, tol).value;
}

/**
 * Independent primal oracle: exhaustive enumeration of the LP's basic
 * feasible plans. An optimal basis has at most atoms + 1 positive entries,
 * so every atom goes to one candidate except possibly one atom that splits
 * between two candidates with the cost budget active.
 *
 * Exponential; refuses more than 5 atoms or 12 candidates in total.
 */
inline double brute_force_sup(const DualInstance& inst)
{
    inst.validate();
    const std::size_t n = inst.source.size();
    if (n > 5 || inst.total_candidates() > 12) {
        throw input_error("brute_force_sup: instance too large for enumeration");
    }
    const double budget = std::pow(inst.radius, inst.order);
    const double slack = 1e-12 * std::max(budget, 1e-300);
    std::vector<std::vector<double>> cost(n), gain(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (const Point& z : inst.candidates[i]) {
            cost[i].push_back(std::pow((z - inst.source.atoms[i]).norm(), inst.order));
            gain[i].push_back(inst.integrand(z));
        }
    }
    const auto& w = inst.source.weights;

    double best = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> pick(n, 0);
    while (true) {
        double c = 0.0, v = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            c += w[i] * cost[i][pick[i]];
            v += w[i] * gain[i][pick[i]];
        }
        if (c <= budget + slack) {
            best = std::max(best, v);
        }
        for (std::size_t s = 0; s < n; ++s) {
            if (w[s] == 0.0) {
                continue;
            }
            const double c_here = cost[s][pick[s]];
            for (std::size_t j = 0; j < cost[s].size(); ++j) {
                const double dc = cost[s][j] - c_here;
                if (dc == 0.0) {
                    continue;
                }
                const double tau = (budget - c) / (w[s] * dc);
                if (tau >= 0.0 && tau <= 1.0) {
                    best = std::max(best, v + w[s] * tau * (gain[s][j] - gain[s][pick[s]]));
                }
            }
        }
        std::size_t k = 0;
        while (k < n && ++pick[k] == cost[k].size()) {
            pick[k] = 0;
            ++k;
        }
        if (k == n) {
            break;
        }
    }
    return best;
}

/**
 * Destination offsets around an atom for a ball of radius r: a lattice of
 * spacing r / density reaching out to reach_factor * r, sorted by
 * nondecreasing length with the zero offset first. In 2-d the lattice is
 * polar (4 * density directions per ring).
 */
inline std::vector<Point> candidate_offsets(int dim, double radius, double reach_factor,
                                            int density)
{
    detail::require(radius > 0.0, "candidate_offsets: require radius > 0");
    detail::require(reach_factor >= 1.0, "candidate_offsets: require reach_factor >= 1");
    detail::require(density >= 1, "candidate_offsets: require density >= 1");
    const double step = radius / density;
    const int rings = static_cast<int>(std::ceil(reach_factor * density - 1e-9));
    std::vector<Point> out;
    out.push_back(Point::Zero(dim));
    if (dim == 1) {
        for (int k = 1; k <= rings; ++k) {
            out.push_back(make_point(-k * step));
            out.push_back(make_point(k * step));
        }
        return out;
    }
    const int directions = 4 * density;
    const double pi = std::acos(-1.0);
    for (int k = 1; k <= rings; ++k) {
        for (int d = 0; d < directions; ++d) {
            const double a = 2.0 * pi * d / directions;
            out.push_back(make_point(k * step * std::cos(a), k * step * std::sin(a)));
        }
    }
    return out;
}

/// (lambda, objective) samples of the dual objective as `lambda,objective` CSV.
inline void write_dual_trace_csv(std::ostream& os, const DualInstance& inst,
                                 const std::vector<double>& lambdas)
{
    os << "lambda,objective\n";
    os.precision(17);
    for (double l : lambdas) {
        os << l << ',' << dual_objective(inst, l) << '\n';
    }
}

} // namespace wdro
