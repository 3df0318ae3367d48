/**
 * @file functions.hpp
 * @brief Named smooth test functions with analytic gradients, and seeded random Fourier fields.
 *
 * In 2-d a named function acts on the first coordinate only.
 */
#pragma once

#include <wdro/errors.hpp>
#include <wdro/field_grid.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace wdro {

struct TestFunction {
    std::string name;
    std::function<double(double)> value;
    std::function<double(double)> derivative;
    std::function<double(double)> second;

    double operator()(const Point& x) const { return value(x[0]); }

    Point gradient(const Point& x) const
    {
        Point g = Point::Zero(x.size());
        g[0] = derivative(x[0]);
        return g;
    }

    ScalarField sample(const Grid& grid) const
    {
        return ScalarField::sample(grid, [this](const Point& x) { return value(x[0]); });
    }

    /// Node values of ||grad f||.
    ScalarField gradient_norm(const Grid& grid) const
    {
        return ScalarField::sample(grid, [this](const Point& x) { return std::abs(derivative(x[0])); });
    }
};

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_pdf(double x)
{
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::acos(-1.0));
}

inline const std::vector<std::string>& test_function_names()
{
    static const std::vector<std::string> names{"sin", "cos", "tanh", "normal_cdf",
                                                "gaussian_bump", "constant"};
    return names;
}

/// sin, cos, tanh, normal_cdf, gaussian_bump (exp(-x^2/2)) or constant (1).
inline TestFunction test_function(const std::string& name)
{
    if (name == "sin") {
        return {name, [](double x) { return std::sin(x); }, [](double x) { return std::cos(x); },
                [](double x) { return -std::sin(x); }};
    }
    if (name == "cos") {
        return {name, [](double x) { return std::cos(x); }, [](double x) { return -std::sin(x); },
                [](double x) { return -std::cos(x); }};
    }
    if (name == "tanh") {
        return {name, [](double x) { return std::tanh(x); },
                [](double x) {
                    const double c = 1.0 / std::cosh(x);
                    return c * c;
                },
                [](double x) {
                    const double c = 1.0 / std::cosh(x);
                    return -2.0 * std::tanh(x) * c * c;
                }};
    }
    if (name == "normal_cdf") {
        return {name, [](double x) { return normal_cdf(x); }, [](double x) { return normal_pdf(x); },
                [](double x) { return -x * normal_pdf(x); }};
    }
    if (name == "gaussian_bump") {
        return {name, [](double x) { return std::exp(-0.5 * x * x); },
                [](double x) { return -x * std::exp(-0.5 * x * x); },
                [](double x) { return (x * x - 1.0) * std::exp(-0.5 * x * x); }};
    }
    if (name == "constant") {
        return {name, [](double) { return 1.0; }, [](double) { return 0.0; },
                [](double) { return 0.0; }};
    }
    throw input_error("unknown test function '" + name + "'");
}

/**
 * f(x) = sum_k a_k sin(w_k . x + phi_k) with integer wavenumbers |k_i| <= 8
 * (base frequency 2 pi / box width) and sum |a_k| <= 1.
 */
class FourierField {
public:
    FourierField(const Grid& grid, std::mt19937_64& rng, int terms = 6, int max_wavenumber = 8)
    {
        std::uniform_int_distribution<int> wave(1, max_wavenumber);
        std::uniform_int_distribution<int> wave2(-max_wavenumber, max_wavenumber);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double pi = std::acos(-1.0);
        double total = 0.0;
        for (int k = 0; k < terms; ++k) {
            Term term;
            term.w = Point::Zero(grid.dim());
            for (int ax = 0; ax < grid.dim(); ++ax) {
                const int j = ax == 0 ? wave(rng) : wave2(rng);
                term.w[ax] = j * 2.0 * pi / (grid.hi(ax) - grid.lo(ax));
            }
            term.phase = 2.0 * pi * unit(rng);
            term.amp = 2.0 * unit(rng) - 1.0;
            total += std::abs(term.amp);
            terms_.push_back(term);
        }
        const double budget = unit(rng);
        for (auto& t : terms_) {
            t.amp *= budget / total;
        }
    }

    double operator()(const Point& x) const
    {
        double s = 0.0;
        for (const auto& t : terms_) {
            s += t.amp * std::sin(t.w.dot(x) + t.phase);
        }
        return s;
    }

    Point gradient(const Point& x) const
    {
        Point g = Point::Zero(x.size());
        for (const auto& t : terms_) {
            g += t.amp * std::cos(t.w.dot(x) + t.phase) * t.w;
        }
        return g;
    }

    ScalarField sample(const Grid& grid) const
    {
        return ScalarField::sample(grid, [this](const Point& x) { return (*this)(x); });
    }

    /// Largest ||grad f|| over the grid nodes.
    double lipschitz_on(const Grid& grid) const
    {
        double best = 0.0;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            best = std::max(best, gradient(grid.node(k)).norm());
        }
        return best;
    }

private:
    struct Term {
        Point w;
        double phase = 0.0;
        double amp = 0.0;
    };
    std::vector<Term> terms_;
};

} // namespace wdro
