/**
 * @file operators.hpp
 * @brief One-step DRO operators, their partition compositions and the dyadic scaling limit.
 *
 *   T^a(t) f(x) = int f(psi_t^a(x) + y) mu_t^a(dy)
 *   I^a(t) f(x) = sup_{nu in B_t^a(m)} int f(psi_t^a(x) + z) nu(dz)
 *   I(t) = inf_a I^a(t),   J(t) = sup_a I^a(t)
 *
 * All operators map a field on the configured grid to a field on the same
 * grid; each node is an independent dual solve.
 */
#pragma once

#include <wdro/dro_dual.hpp>
#include <wdro/errors.hpp>
#include <wdro/field_grid.hpp>
#include <wdro/parallel.hpp>
#include <wdro/reference_models.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace wdro {

/// Finite time grid 0 = t_0 < t_1 < ... < t_k.
class Partition {
public:
    explicit Partition(std::vector<double> times) : times_(std::move(times)) { validate(); }

    void validate() const
    {
        detail::require(!times_.empty() && times_.front() == 0.0,
                        "partition: must start at 0");
        for (std::size_t k = 1; k < times_.size(); ++k) {
            detail::require(std::isfinite(times_[k]) && times_[k] > times_[k - 1],
                            "partition: times must be strictly increasing");
        }
    }

    const std::vector<double>& times() const { return times_; }
    double horizon() const { return times_.back(); }
    std::size_t gaps() const { return times_.size() - 1; }
    double gap(std::size_t k) const { return times_[k + 1] - times_[k]; }

    double mesh() const
    {
        double m = 0.0;
        for (std::size_t k = 0; k < gaps(); ++k) {
            m = std::max(m, gap(k));
        }
        return m;
    }

    /// True when every time of `coarse` also appears here.
    bool refines(const Partition& coarse) const
    {
        return std::includes(times_.begin(), times_.end(), coarse.times_.begin(),
                             coarse.times_.end());
    }

    bool operator==(const Partition& other) const { return times_ == other.times_; }

private:
    std::vector<double> times_;
};

/// The dyadic partition {0, 2^-n, 2 * 2^-n, ..., k 2^-n, t} of [0, t].
struct DyadicSchedule {
    double horizon = 0.0;
    int level = 0;

    Partition expand() const
    {
        detail::require(std::isfinite(horizon) && horizon >= 0.0, "dyadic: require t >= 0");
        detail::require(level >= 0 && level <= 30, "dyadic: level out of range");
        std::vector<double> times{0.0};
        if (horizon == 0.0) {
            return Partition(times);
        }
        const double step = std::ldexp(1.0, -level);
        for (long k = 1;; ++k) {
            const double s = k * step;
            if (!(s < horizon)) {
                break;
            }
            times.push_back(s);
        }
        times.push_back(horizon);
        return Partition(times);
    }
};

struct OperatorConfig {
    ReferenceModel model;
    AmbiguitySpec ambiguity;
    Grid grid;
    int quad_order = 16;
    double dual_tol = 1e-10;
    double reach_factor = 4.0;
    int candidate_density = 4;

    void validate() const
    {
        ambiguity.validate();
        detail::require(grid.dim() == model.dim(), "operators: grid and model dimensions differ");
        detail::require(quad_order >= 4 && quad_order <= 64, "operators: quad_order in [4, 64]");
        detail::require(dual_tol > 0.0, "operators: require dual_tol > 0");
        detail::require(reach_factor >= 1.0, "operators: require reach_factor >= 1");
        detail::require(candidate_density >= 1, "operators: require candidate_density >= 1");
    }
};

enum class Mode { DRO, BestCase };

namespace detail {

// Quadrature law and candidate costs of one action at one step size.
struct ActionStep {
    std::size_t action = 0;
    double dt = 0.0;
    DiscreteMeasure law;
    std::vector<Point> offsets;
    std::vector<double> costs;
};

inline ActionStep make_action_step(const OperatorConfig& cfg, std::size_t a, double dt)
{
    ActionStep s;
    s.action = a;
    s.dt = dt;
    s.law = cfg.model.law(a, dt, cfg.quad_order);
    const double r = cfg.ambiguity.radius(dt);
    if (r > 0.0) {
        s.offsets = candidate_offsets(cfg.model.dim(), r, cfg.reach_factor, cfg.candidate_density);
        for (const Point& o : s.offsets) {
            s.costs.push_back(std::pow(o.norm(), cfg.ambiguity.p));
        }
    }
    return s;
}

inline double field_at(const ScalarField& f, const Point& x)
{
    return x.size() == 1 ? f.eval1(x[0]) : f.eval2(x[0], x[1]);
}

inline double reference_value(const OperatorConfig& cfg, const ActionStep& s,
                              const ScalarField& f, const Point& x)
{
    const Point base = cfg.model.psi(s.action, s.dt, x);
    double v = 0.0;
    for (std::size_t i = 0; i < s.law.size(); ++i) {
        v += s.law.weights[i] * field_at(f, base + s.law.atoms[i]);
    }
    return v;
}

inline double robust_value(const OperatorConfig& cfg, const ActionStep& s, const ScalarField& f,
                           const Point& x, DualSolver& solver, std::vector<double>& gains)
{
    const double r = cfg.ambiguity.radius(s.dt);
    if (r == 0.0) {
        return reference_value(cfg, s, f, x);
    }
    const Point base = cfg.model.psi(s.action, s.dt, x);
    solver.clear();
    gains.resize(s.offsets.size());
    for (std::size_t i = 0; i < s.law.size(); ++i) {
        const Point y = base + s.law.atoms[i];
        for (std::size_t k = 0; k < s.offsets.size(); ++k) {
            gains[k] = field_at(f, y + s.offsets[k]);
        }
        solver.add_atom(s.law.weights[i], s.costs.data(), gains.data(), gains.size(),
                        cfg.ambiguity.p);
    }
    return solver.solve(r, cfg.ambiguity.p, cfg.dual_tol).value;
}

// Node map: combine = min over actions (DRO), max (best case) or a single action.
inline ScalarField apply_steps(const OperatorConfig& cfg, const std::vector<ActionStep>& steps,
                               const ScalarField& f, Mode mode, bool robust)
{
    require(f.grid() == cfg.grid, "operators: field grid differs from the configured grid");
    const Grid& g = cfg.grid;
    std::vector<double> out(g.size());
    parallel_for(g.size(), [&](std::size_t k) {
        DualSolver solver;
        std::vector<double> gains;
        const Point x = g.node(k);
        double best = mode == Mode::DRO ? std::numeric_limits<double>::infinity()
                                        : -std::numeric_limits<double>::infinity();
        for (const ActionStep& s : steps) {
            const double v =
                robust ? robust_value(cfg, s, f, x, solver, gains) : reference_value(cfg, s, f, x);
            best = mode == Mode::DRO ? std::min(best, v) : std::max(best, v);
        }
        out[k] = best;
    });
    return ScalarField(g, std::move(out));
}

// Per-(action, dt) step data, built on first use.
class StepCache {
public:
    explicit StepCache(const OperatorConfig& cfg) : cfg_(cfg) {}

    const std::vector<ActionStep>& at(double dt)
    {
        auto it = cache_.find(dt);
        if (it != cache_.end()) {
            return it->second;
        }
        std::vector<ActionStep> steps;
        for (std::size_t a = 0; a < cfg_.model.action_count(); ++a) {
            steps.push_back(make_action_step(cfg_, a, dt));
        }
        return cache_.emplace(dt, std::move(steps)).first->second;
    }

private:
    const OperatorConfig& cfg_;
    std::map<double, std::vector<ActionStep>> cache_;
};

} // namespace detail

/// T^a(t) f on the grid.
inline ScalarField reference_step(const OperatorConfig& cfg, std::size_t a, double t,
                                  const ScalarField& f)
{
    detail::require(t >= 0.0, "reference_step: require t >= 0");
    cfg.validate();
    if (t == 0.0) {
        return f;
    }
    return detail::apply_steps(cfg, {detail::make_action_step(cfg, a, t)}, f, Mode::DRO, false);
}

/// inf_a T^a(t) f, the non-robust one-step value.
inline ScalarField reference_min_step(const OperatorConfig& cfg, double t, const ScalarField& f)
{
    detail::require(t >= 0.0, "reference_step: require t >= 0");
    cfg.validate();
    if (t == 0.0) {
        return f;
    }
    detail::StepCache cache(cfg);
    return detail::apply_steps(cfg, cache.at(t), f, Mode::DRO, false);
}

/// I^a(t) f; equals reference_step when m = 0.
inline ScalarField dro_step_single_action(const OperatorConfig& cfg, std::size_t a, double t,
                                          const ScalarField& f)
{
    detail::require(t >= 0.0, "dro_step: require t >= 0");
    cfg.validate();
    if (t == 0.0) {
        return f;
    }
    return detail::apply_steps(cfg, {detail::make_action_step(cfg, a, t)}, f, Mode::DRO, true);
}

/// I(t) f = min over actions of I^a(t) f.
inline ScalarField dro_step(const OperatorConfig& cfg, double t, const ScalarField& f)
{
    detail::require(t >= 0.0, "dro_step: require t >= 0");
    cfg.validate();
    if (t == 0.0) {
        return f;
    }
    detail::StepCache cache(cfg);
    return detail::apply_steps(cfg, cache.at(t), f, Mode::DRO, true);
}

/// J(t) f = max over actions of I^a(t) f.
inline ScalarField best_case_step(const OperatorConfig& cfg, double t, const ScalarField& f)
{
    detail::require(t >= 0.0, "best_case_step: require t >= 0");
    cfg.validate();
    if (t == 0.0) {
        return f;
    }
    detail::StepCache cache(cfg);
    return detail::apply_steps(cfg, cache.at(t), f, Mode::BestCase, true);
}

/**
 * I(t_1 - t_0) ... I(t_k - t_{k-1}) f (or with J): the last gap is applied
 * first. The partition {0} returns f.
 */
inline ScalarField compose(const OperatorConfig& cfg, const Partition& pi, const ScalarField& f,
                           Mode mode = Mode::DRO)
{
    cfg.validate();
    detail::require(f.grid() == cfg.grid, "compose: field grid differs from the configured grid");
    detail::StepCache cache(cfg);
    ScalarField v = f;
    for (std::size_t k = pi.gaps(); k-- > 0;) {
        v = detail::apply_steps(cfg, cache.at(pi.gap(k)), v, mode, true);
    }
    return v;
}

struct LevelGap {
    int level = 0;
    /// Window sup of |I(pi^level) f - I(pi^previous) f| against the last distinct partition.
    double gap = 0.0;
};

struct ScalingLimitResult {
    ScalarField field;
    int levels_used = 0;
    std::vector<LevelGap> level_gaps;
    bool converged = false;
};

/**
 * Dyadic approximation of S(t) f: composes over pi_t^n for n = 0, 1, ...
 * and stops once two successive distinct partitions agree to stop_tol on
 * the window, or at max_level. Levels whose dyadic partition coincides
 * with the previous one carry no information and are skipped.
 */
inline ScalingLimitResult scaling_limit(const OperatorConfig& cfg, double t, const ScalarField& f,
                                        int max_level, double stop_tol,
                                        const CompactWindow& window)
{
    detail::require(t >= 0.0, "scaling_limit: require t >= 0");
    detail::require(max_level >= 0 && max_level <= 10, "scaling_limit: max_level in [0, 10]");
    detail::require(stop_tol > 0.0, "scaling_limit: require stop_tol > 0");
    cfg.validate();
    const auto nodes = window.nodes(cfg.grid);
    if (t == 0.0) {
        return ScalingLimitResult{f, 0, {}, true};
    }

    Partition previous = DyadicSchedule{t, 0}.expand();
    ScalingLimitResult out{compose(cfg, previous, f), 0, {}, false};
    for (int n = 1; n <= max_level; ++n) {
        Partition pi = DyadicSchedule{t, n}.expand();
        out.levels_used = n;
        if (pi == previous) {
            continue;
        }
        ScalarField next = compose(cfg, pi, f);
        double gap = 0.0;
        for (std::size_t k : nodes) {
            gap = std::max(gap, std::abs(next[k] - out.field[k]));
        }
        out.level_gaps.push_back({n, gap});
        out.field = std::move(next);
        previous = std::move(pi);
        if (gap <= stop_tol) {
            out.converged = true;
            break;
        }
    }
    return out;
}

/// J(pi_t^n) f for n = 0..max_level; a lower-bound diagnostic only.
inline std::vector<ScalarField> best_case_diagnostic(const OperatorConfig& cfg, double t,
                                                     const ScalarField& f, int max_level)
{
    detail::require(t >= 0.0, "best_case_diagnostic: require t >= 0");
    detail::require(max_level >= 0 && max_level <= 10, "best_case_diagnostic: max_level in [0, 10]");
    if (t == 0.0) {
        return {f};
    }
    std::vector<ScalarField> out;
    for (int n = 0; n <= max_level; ++n) {
        out.push_back(compose(cfg, DyadicSchedule{t, n}.expand(), f, Mode::BestCase));
    }
    return out;
}

} // namespace wdro
