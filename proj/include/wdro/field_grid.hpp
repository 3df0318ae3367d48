/**
 * @file field_grid.hpp
 * @brief Uniform box grids and the bounded fields sampled on them.
 *
 * A ScalarField is the computational stand-in for a bounded continuous
 * function on R^d (d = 1 or 2): node values on a uniform box grid, read
 * off-grid by multilinear interpolation and extended outside the box by
 * clamping to the nearest boundary node.
 */
#pragma once

#include <wdro/errors.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace wdro {

/// A point of R^d with d <= 2; stack allocated.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2, 1>;

inline Point make_point(double x) { return Point::Constant(1, x); }

inline Point make_point(double x, double y)
{
    Point p(2);
    p << x, y;
    return p;
}

/**
 * Uniform tensor grid on the box [lo, hi] with n nodes per axis.
 *
 * Node i on an axis sits at lo + i * spacing, except the last node which is
 * hi exactly. Flat node indices run x-fastest.
 */
class Grid {
public:
    static constexpr int min_points = 8;

    Grid(std::vector<double> lo, std::vector<double> hi, std::vector<int> n)
        : lo_(std::move(lo)), hi_(std::move(hi)), n_(std::move(n))
    {
        detail::require(lo_.size() == hi_.size() && lo_.size() == n_.size(),
                        "grid: lo, hi and n must have the same length");
        detail::require(lo_.size() == 1 || lo_.size() == 2, "grid: dim must be 1 or 2");
        for (std::size_t k = 0; k < lo_.size(); ++k) {
            detail::require(std::isfinite(lo_[k]) && std::isfinite(hi_[k]) && lo_[k] < hi_[k],
                            "grid: require finite lo < hi on every axis");
            detail::require(n_[k] >= min_points, "grid: require n >= 8 on every axis");
            spacing_[k] = (hi_[k] - lo_[k]) / (n_[k] - 1);
        }
    }

    static Grid line(double lo, double hi, int n) { return Grid({lo}, {hi}, {n}); }

    static Grid square(double lo, double hi, int n) { return Grid({lo, lo}, {hi, hi}, {n, n}); }

    int dim() const { return static_cast<int>(lo_.size()); }
    double lo(int axis) const { return lo_[axis]; }
    double hi(int axis) const { return hi_[axis]; }
    int n(int axis) const { return n_[axis]; }
    double spacing(int axis) const { return spacing_[axis]; }

    std::size_t size() const
    {
        std::size_t s = 1;
        for (int v : n_) {
            s *= static_cast<std::size_t>(v);
        }
        return s;
    }

    double coord(int axis, int i) const
    {
        return i == n_[axis] - 1 ? hi_[axis] : lo_[axis] + i * spacing_[axis];
    }

    std::array<int, 2> index(std::size_t flat) const
    {
        if (dim() == 1) {
            return {static_cast<int>(flat), 0};
        }
        return {static_cast<int>(flat % n_[0]), static_cast<int>(flat / n_[0])};
    }

    std::size_t flat(int i, int j = 0) const
    {
        return static_cast<std::size_t>(i) + static_cast<std::size_t>(j) * n_[0];
    }

    Point node(std::size_t flat_index) const
    {
        auto [i, j] = index(flat_index);
        return dim() == 1 ? make_point(coord(0, i)) : make_point(coord(0, i), coord(1, j));
    }

    /// Grid with every axis refined to 2(n-1)+1 points (nodes nested).
    Grid refined() const
    {
        std::vector<int> n2;
        for (int v : n_) {
            n2.push_back(2 * (v - 1) + 1);
        }
        return Grid(lo_, hi_, n2);
    }

    bool operator==(const Grid& other) const
    {
        return lo_ == other.lo_ && hi_ == other.hi_ && n_ == other.n_;
    }

    const std::vector<double>& lo_vec() const { return lo_; }
    const std::vector<double>& hi_vec() const { return hi_; }
    const std::vector<int>& n_vec() const { return n_; }

private:
    std::vector<double> lo_, hi_;
    std::vector<int> n_;
    std::array<double, 2> spacing_{0.0, 0.0};
};

/**
 * Interior sub-box on which convergence diagnostics are measured.
 *
 * Must leave a margin of at least 10% of the box width on each side of
 * every axis, which keeps clamp-extension error out of the measurements.
 */
struct CompactWindow {
    std::vector<double> lo, hi;

    void validate(const Grid& grid) const
    {
        detail::require(static_cast<int>(lo.size()) == grid.dim() &&
                            static_cast<int>(hi.size()) == grid.dim(),
                        "window: dimension does not match the grid");
        for (int k = 0; k < grid.dim(); ++k) {
            const double margin = 0.1 * (grid.hi(k) - grid.lo(k));
            detail::require(lo[k] < hi[k], "window: require lo < hi");
            detail::require(lo[k] >= grid.lo(k) + margin - 1e-12 &&
                                hi[k] <= grid.hi(k) - margin + 1e-12,
                            "window: must lie inside the grid with a 10% margin per side");
        }
    }

    bool contains(const Point& x) const
    {
        for (Eigen::Index k = 0; k < x.size(); ++k) {
            if (x[k] < lo[k] - 1e-12 || x[k] > hi[k] + 1e-12) {
                return false;
            }
        }
        return true;
    }

    /// Flat indices of the grid nodes inside the window.
    std::vector<std::size_t> nodes(const Grid& grid) const
    {
        validate(grid);
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (contains(grid.node(i))) {
                out.push_back(i);
            }
        }
        return out;
    }
};

/// Bounded field sampled on a grid; clamp extension outside the box.
class ScalarField {
public:
    ScalarField(Grid grid, std::vector<double> values)
        : grid_(std::move(grid)), values_(std::move(values))
    {
        detail::require(values_.size() == grid_.size(), "field: value count does not match grid");
        for (double v : values_) {
            if (!std::isfinite(v)) {
                throw data_error("field: non-finite node value");
            }
        }
    }

    static ScalarField constant(const Grid& grid, double c)
    {
        return ScalarField(grid, std::vector<double>(grid.size(), c));
    }

    template <typename F>
    static ScalarField sample(const Grid& grid, F&& fn)
    {
        std::vector<double> v(grid.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            v[i] = fn(grid.node(i));
        }
        return ScalarField(grid, std::move(v));
    }

    const Grid& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const { return values_.size(); }

    /// Interpolated value at a scalar coordinate (1-d fields).
    double eval1(double x) const
    {
        auto [i, theta] = locate(0, x);
        if (theta == 0.0) {
            return values_[i];
        }
        return values_[i] + theta * (values_[i + 1] - values_[i]);
    }

    /// Bilinear value at (x, y) (2-d fields).
    double eval2(double x, double y) const
    {
        auto [i, tx] = locate(0, x);
        auto [j, ty] = locate(1, y);
        const std::size_t n0 = grid_.n(0);
        const double* row = values_.data() + j * n0;
        const double a = tx == 0.0 ? row[i] : row[i] + tx * (row[i + 1] - row[i]);
        if (ty == 0.0) {
            return a;
        }
        const double* up = row + n0;
        const double b = tx == 0.0 ? up[i] : up[i] + tx * (up[i + 1] - up[i]);
        return a + ty * (b - a);
    }

    double eval(const Point& x) const
    {
        detail::require(x.size() == grid_.dim(), "eval: point dimension does not match field");
        for (Eigen::Index k = 0; k < x.size(); ++k) {
            detail::require(std::isfinite(x[k]), "eval: non-finite point");
        }
        return grid_.dim() == 1 ? eval1(x[0]) : eval2(x[0], x[1]);
    }

    ScalarField operator-(const ScalarField& other) const
    {
        return combine(other, [](double a, double b) { return a - b; });
    }
    ScalarField operator+(const ScalarField& other) const
    {
        return combine(other, [](double a, double b) { return a + b; });
    }
    ScalarField operator*(double s) const
    {
        std::vector<double> v(values_);
        for (double& x : v) {
            x *= s;
        }
        return ScalarField(grid_, std::move(v));
    }
    ScalarField shifted(double c) const
    {
        std::vector<double> v(values_);
        for (double& x : v) {
            x += c;
        }
        return ScalarField(grid_, std::move(v));
    }

private:
    // Cell index and fractional offset along an axis. Points within 1e-9
    // cells of a node snap onto it so node values are reproduced bit-exactly.
    std::pair<std::size_t, double> locate(int axis, double x) const
    {
        const int n = grid_.n(axis);
        double u = (x - grid_.lo(axis)) / grid_.spacing(axis);
        if (!(u > 0.0)) {
            return {0, 0.0};
        }
        if (u >= n - 1) {
            return {static_cast<std::size_t>(n - 1), 0.0};
        }
        const double r = std::nearbyint(u);
        if (std::abs(u - r) <= 1e-9) {
            return {static_cast<std::size_t>(r), 0.0};
        }
        const double fl = std::floor(u);
        return {static_cast<std::size_t>(fl), u - fl};
    }

    template <typename Op>
    ScalarField combine(const ScalarField& other, Op op) const
    {
        detail::require(grid_ == other.grid_, "field arithmetic: grids differ");
        std::vector<double> v(values_.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            v[i] = op(values_[i], other.values_[i]);
        }
        return ScalarField(grid_, std::move(v));
    }

    Grid grid_;
    std::vector<double> values_;
};

inline double eval(const ScalarField& field, const Point& x) { return field.eval(x); }

/// max |values| over all nodes, or over the nodes inside the window.
inline double sup_norm(const ScalarField& field, const std::optional<CompactWindow>& window = {})
{
    double best = 0.0;
    if (!window) {
        for (double v : field.values()) {
            best = std::max(best, std::abs(v));
        }
        return best;
    }
    for (std::size_t i : window->nodes(field.grid())) {
        best = std::max(best, std::abs(field[i]));
    }
    return best;
}

/// Per-axis derivatives: central at interior nodes, one-sided at the boundary.
inline std::vector<ScalarField> gradient_fd(const ScalarField& field)
{
    const Grid& g = field.grid();
    std::vector<ScalarField> out;
    for (int axis = 0; axis < g.dim(); ++axis) {
        const double h = g.spacing(axis);
        const std::size_t stride = axis == 0 ? 1 : static_cast<std::size_t>(g.n(0));
        std::vector<double> d(g.size());
        for (std::size_t k = 0; k < g.size(); ++k) {
            const int i = g.index(k)[axis];
            const int last = g.n(axis) - 1;
            if (i == 0) {
                d[k] = (field[k + stride] - field[k]) / h;
            } else if (i == last) {
                d[k] = (field[k] - field[k - stride]) / h;
            } else {
                d[k] = (field[k + stride] - field[k - stride]) / (2.0 * h);
            }
        }
        out.emplace_back(g, std::move(d));
    }
    return out;
}

/// Largest axis-wise difference quotient between adjacent nodes.
inline double lipschitz_estimate(const ScalarField& field)
{
    const Grid& g = field.grid();
    double best = 0.0;
    for (int axis = 0; axis < g.dim(); ++axis) {
        const std::size_t stride = axis == 0 ? 1 : static_cast<std::size_t>(g.n(0));
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (g.index(k)[axis] == g.n(axis) - 1) {
                continue;
            }
            best = std::max(best, std::abs(field[k + stride] - field[k]) / g.spacing(axis));
        }
    }
    return best;
}

/// Writes `x[,y],value` CSV, one node per row, full double precision.
inline void write_csv(std::ostream& os, const ScalarField& field)
{
    const Grid& g = field.grid();
    os << (g.dim() == 1 ? "x,value\n" : "x,y,value\n");
    os << std::setprecision(17);
    for (std::size_t k = 0; k < g.size(); ++k) {
        const Point p = g.node(k);
        os << p[0];
        if (g.dim() == 2) {
            os << ',' << p[1];
        }
        os << ',' << field[k] << '\n';
    }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        out.push_back(cell);
    }
    return out;
}

} // namespace detail

/// Loads a field written by write_csv; the grid is recovered from the coordinates.
inline ScalarField read_field_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line)) {
        throw input_error("field csv: empty input");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    int dim = 0;
    if (line == "x,value") {
        dim = 1;
    } else if (line == "x,y,value") {
        dim = 2;
    } else {
        throw input_error("field csv: header must be 'x,value' or 'x,y,value'");
    }

    std::vector<std::array<double, 3>> rows;
    std::map<double, int> axis_values[2];
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto cells = detail::split_csv_line(line);
        if (static_cast<int>(cells.size()) != dim + 1) {
            throw input_error("field csv: wrong column count in row '" + line + "'");
        }
        std::array<double, 3> r{0.0, 0.0, 0.0};
        for (int c = 0; c <= dim; ++c) {
            r[c] = std::stod(cells[c]);
        }
        axis_values[0][r[0]] = 0;
        if (dim == 2) {
            axis_values[1][r[1]] = 0;
        }
        rows.push_back({r[0], dim == 2 ? r[1] : 0.0, r[dim]});
    }

    std::vector<double> lo, hi;
    std::vector<int> n;
    for (int k = 0; k < dim; ++k) {
        if (axis_values[k].size() < 2) {
            throw input_error("field csv: too few distinct coordinates");
        }
        lo.push_back(axis_values[k].begin()->first);
        hi.push_back(axis_values[k].rbegin()->first);
        n.push_back(static_cast<int>(axis_values[k].size()));
    }
    Grid grid(lo, hi, n);
    if (rows.size() != grid.size()) {
        throw input_error("field csv: row count does not form a full grid");
    }
    std::vector<double> values(grid.size(), 0.0);
    std::vector<bool> seen(grid.size(), false);
    for (const auto& r : rows) {
        int idx[2] = {0, 0};
        for (int k = 0; k < dim; ++k) {
            const double u = (r[k] - grid.lo(k)) / grid.spacing(k);
            idx[k] = static_cast<int>(std::lround(u));
            if (std::abs(u - idx[k]) > 1e-6) {
                throw input_error("field csv: coordinates are not uniformly spaced");
            }
        }
        const std::size_t f = grid.flat(idx[0], idx[1]);
        if (seen[f]) {
            throw input_error("field csv: duplicate node");
        }
        seen[f] = true;
        values[f] = r[2];
    }
    return ScalarField(std::move(grid), std::move(values));
}

} // namespace wdro
