/**
 * @file pde_solver.hpp
 * @brief Explicit monotone scheme for  d_t v = inf_a [ 1/2 tr(S_a D^2 v) + <beta_a, grad v> ] + m |grad v|.
 *
 * S_a = sigma(a) sigma(a)^T and beta_a(x) is b(a) (Brownian drift) or
 * -theta(a) x + kappa(a) (Ornstein-Uhlenbeck). Diffusion uses central
 * second differences, drift is upwinded per action, and the gradient norm
 * uses the monotone one-sided selector max(D+ v, -D- v, 0) per axis.
 * Ghost values outside the box equal the boundary node (clamp).
 */
#pragma once

#include <wdro/errors.hpp>
#include <wdro/field_grid.hpp>
#include <wdro/operators.hpp>
#include <wdro/parallel.hpp>
#include <wdro/reference_models.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <vector>

namespace wdro {

struct PdeScheme {
    /// Time step; 0 selects the largest step allowed by cfl_safety.
    double dt = 0.0;
    double cfl_safety = 0.9;

    void validate() const
    {
        detail::require(std::isfinite(dt) && dt >= 0.0, "pde: require dt >= 0");
        detail::require(cfl_safety > 0.0 && cfl_safety <= 1.0, "pde: cfl_safety must lie in (0, 1]");
    }
};

struct SpaceTimeField {
    Grid grid;
    std::vector<double> times;
    std::vector<ScalarField> snapshots;
};

struct PdeSummary {
    double dt = 0.0;
    long steps = 0;
    /// dt times the stability rate; the scheme is monotone when this is <= 1.
    double cfl_number = 0.0;
    /// cfl_safety - cfl_number
    double cfl_margin = 0.0;
};

struct PdeSolution {
    SpaceTimeField field;
    PdeSummary summary;
};

namespace detail {

inline std::size_t axis_stride(const Grid& g, int axis)
{
    return axis == 0 ? 1 : static_cast<std::size_t>(g.n(0));
}

// Neighbour values along an axis with clamp ghosts.
inline std::pair<double, double> neighbours(const ScalarField& v, std::size_t k, int axis)
{
    const Grid& g = v.grid();
    const int i = g.index(k)[axis];
    const std::size_t s = axis_stride(g, axis);
    const double minus = i == 0 ? v[k] : v[k - s];
    const double plus = i == g.n(axis) - 1 ? v[k] : v[k + s];
    return {minus, plus};
}

inline void require_diagonal_diffusion(const OperatorConfig& cfg)
{
    if (cfg.model.dim() == 1) {
        return;
    }
    for (std::size_t a = 0; a < cfg.model.action_count(); ++a) {
        const Matrix s = cfg.model.diffusion(a);
        if (std::abs(s(0, 1)) > 1e-14) {
            throw config_error("pde: only diagonal sigma sigma^T is supported in 2-d");
        }
    }
}

} // namespace detail

/**
 * Largest stable rate: sum_axis max_a S_kk / h^2 + sum_axis (max |beta_k| + m) / h,
 * with the drift maximum taken over grid nodes.
 */
inline double stability_rate(const OperatorConfig& cfg)
{
    const Grid& g = cfg.grid;
    double rate = 0.0;
    for (int k = 0; k < g.dim(); ++k) {
        const double h = g.spacing(k);
        double diff = 0.0, drift = 0.0;
        for (std::size_t a = 0; a < cfg.model.action_count(); ++a) {
            diff = std::max(diff, cfg.model.diffusion(a)(k, k));
            if (cfg.model.family() == ModelFamily::BrownianDrift) {
                drift = std::max(drift, std::abs(cfg.model.action(a).b[k]));
            } else {
                for (std::size_t n = 0; n < g.size(); ++n) {
                    drift = std::max(drift, std::abs(cfg.model.velocity(a, g.node(n))[k]));
                }
            }
        }
        rate += diff / (h * h) + (drift + cfg.ambiguity.m) / h;
    }
    return rate;
}

/// inf_a L^a f + m |grad f| by central differences (a diagnostic evaluator).
inline ScalarField generator_apply(const OperatorConfig& cfg, const ScalarField& f)
{
    cfg.validate();
    detail::require(f.grid() == cfg.grid, "generator_apply: field grid differs from the configured grid");
    const Grid& g = cfg.grid;
    const int d = g.dim();
    const auto grad = gradient_fd(f);
    std::vector<double> out(g.size());
    parallel_for(g.size(), [&](std::size_t k) {
        Point gk(d);
        Matrix hess = Matrix::Zero(d, d);
        for (int ax = 0; ax < d; ++ax) {
            gk[ax] = grad[ax][k];
            const auto [vm, vp] = detail::neighbours(f, k, ax);
            const double h = g.spacing(ax);
            hess(ax, ax) = (vp - 2.0 * f[k] + vm) / (h * h);
        }
        if (d == 2) {
            // cross derivative from the x-gradient differenced along y
            const auto [gm, gp] = detail::neighbours(grad[0], k, 1);
            const int j = g.index(k)[1];
            const double span = (j == 0 || j == g.n(1) - 1 ? 1.0 : 2.0) * g.spacing(1);
            hess(0, 1) = hess(1, 0) = (gp - gm) / span;
        }
        const Point x = g.node(k);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < cfg.model.action_count(); ++a) {
            const Matrix s = cfg.model.diffusion(a);
            const double diffusion = 0.5 * (s.cwiseProduct(hess)).sum();
            best = std::min(best, diffusion + cfg.model.velocity(a, x).dot(gk));
        }
        out[k] = best + cfg.ambiguity.m * gk.norm();
    });
    return ScalarField(g, std::move(out));
}

/**
 * One explicit Euler step v + dt [ inf_a (diffusion + upwind drift) + m G(v) ].
 * Throws config_error when dt violates the monotonicity bound dt * rate <= cfl_safety.
 */
inline ScalarField step_forward(const OperatorConfig& cfg, const PdeScheme& scheme,
                                const ScalarField& v)
{
    cfg.validate();
    scheme.validate();
    detail::require(v.grid() == cfg.grid, "step_forward: field grid differs from the configured grid");
    detail::require(scheme.dt > 0.0, "step_forward: require dt > 0");
    detail::require_diagonal_diffusion(cfg);
    const double cfl = scheme.dt * stability_rate(cfg);
    if (cfl > scheme.cfl_safety * (1.0 + 1e-12)) {
        throw config_error("pde: time step violates the CFL bound (dt * rate = " +
                           std::to_string(cfl) + ")");
    }

    const Grid& g = cfg.grid;
    const int d = g.dim();
    const double m = cfg.ambiguity.m;
    const std::size_t na = cfg.model.action_count();
    std::vector<double> diag(na * d);
    for (std::size_t a = 0; a < na; ++a) {
        const Matrix s = cfg.model.diffusion(a);
        for (int ax = 0; ax < d; ++ax) {
            diag[a * d + ax] = s(ax, ax);
        }
    }

    std::vector<double> out(g.size());
    parallel_for(g.size(), [&](std::size_t k) {
        double dplus[2], dminus[2], second[2];
        double grad2 = 0.0;
        for (int ax = 0; ax < d; ++ax) {
            const auto [vm, vp] = detail::neighbours(v, k, ax);
            const double h = g.spacing(ax);
            dplus[ax] = (vp - v[k]) / h;
            dminus[ax] = (v[k] - vm) / h;
            second[ax] = (vp - 2.0 * v[k] + vm) / (h * h);
            const double up = std::max({dplus[ax], -dminus[ax], 0.0});
            grad2 += up * up;
        }
        const Point x = g.node(k);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < na; ++a) {
            const Point beta = cfg.model.velocity(a, x);
            double l = 0.0;
            for (int ax = 0; ax < d; ++ax) {
                l += 0.5 * diag[a * d + ax] * second[ax];
                l += beta[ax] > 0.0 ? beta[ax] * dplus[ax] : beta[ax] * dminus[ax];
            }
            best = std::min(best, l);
        }
        out[k] = v[k] + scheme.dt * (best + m * std::sqrt(grad2));
    });
    return ScalarField(g, std::move(out));
}

/**
 * Integrates the initial-value problem to `horizon`, recording snapshots at
 * the requested times (each hit exactly by a shortened step).
 */
inline PdeSolution solve(const OperatorConfig& cfg, const PdeScheme& scheme, const ScalarField& u0,
                         double horizon, std::vector<double> snapshot_times)
{
    cfg.validate();
    scheme.validate();
    detail::require(std::isfinite(horizon) && horizon >= 0.0, "pde solve: require horizon >= 0");
    for (double s : snapshot_times) {
        detail::require(s >= 0.0 && s <= horizon, "pde solve: snapshot times must lie in [0, T]");
    }
    std::sort(snapshot_times.begin(), snapshot_times.end());
    snapshot_times.erase(std::unique(snapshot_times.begin(), snapshot_times.end()),
                         snapshot_times.end());

    const double rate = stability_rate(cfg);
    PdeScheme step = scheme;
    if (step.dt == 0.0) {
        step.dt = rate > 0.0 ? scheme.cfl_safety / rate : std::max(horizon, 1.0);
    }
    PdeSolution out{SpaceTimeField{cfg.grid, {}, {}}, PdeSummary{}};
    out.summary.dt = step.dt;
    out.summary.cfl_number = step.dt * rate;
    out.summary.cfl_margin = scheme.cfl_safety - out.summary.cfl_number;
    if (out.summary.cfl_number > scheme.cfl_safety * (1.0 + 1e-12)) {
        throw config_error("pde: time step violates the CFL bound");
    }

    ScalarField v = u0;
    double t = 0.0;
    std::size_t next = 0;
    auto record = [&] {
        while (next < snapshot_times.size() && snapshot_times[next] <= t) {
            out.field.times.push_back(snapshot_times[next]);
            out.field.snapshots.push_back(v);
            ++next;
        }
    };
    record();
    while (next < snapshot_times.size()) {
        const double target = snapshot_times[next];
        PdeScheme s = step;
        if (t + step.dt >= target - 1e-14 * std::max(1.0, target)) {
            s.dt = target - t;
        }
        if (s.dt > 0.0) {
            v = step_forward(cfg, s, v);
            ++out.summary.steps;
        }
        t = s.dt == step.dt ? t + s.dt : target;
        record();
    }
    return out;
}

/**
 * Terminal-value form  -d_t v = (same operator),  v(T) = g: solved through
 * w(tau) = v(T - tau). Returned snapshots are v at the requested times.
 */
inline PdeSolution solve_terminal(const OperatorConfig& cfg, const PdeScheme& scheme,
                                  const ScalarField& terminal, double horizon,
                                  const std::vector<double>& times)
{
    std::vector<double> reversed;
    for (double s : times) {
        detail::require(s >= 0.0 && s <= horizon, "pde solve: times must lie in [0, T]");
        reversed.push_back(horizon - s);
    }
    PdeSolution w = solve(cfg, scheme, terminal, horizon, reversed);
    PdeSolution out{SpaceTimeField{cfg.grid, {}, {}}, w.summary};
    for (std::size_t k = w.field.times.size(); k-- > 0;) {
        out.field.times.push_back(horizon - w.field.times[k]);
        out.field.snapshots.push_back(w.field.snapshots[k]);
    }
    return out;
}

/// Writes `t,x[,y],value` CSV for every snapshot.
inline void write_csv(std::ostream& os, const SpaceTimeField& field)
{
    const Grid& g = field.grid;
    os << (g.dim() == 1 ? "t,x,value\n" : "t,x,y,value\n");
    os << std::setprecision(17);
    for (std::size_t s = 0; s < field.times.size(); ++s) {
        for (std::size_t k = 0; k < g.size(); ++k) {
            const Point p = g.node(k);
            os << field.times[s] << ',' << p[0];
            if (g.dim() == 2) {
                os << ',' << p[1];
            }
            os << ',' << field.snapshots[s][k] << '\n';
        }
    }
}

} // namespace wdro
