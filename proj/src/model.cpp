#include "lpvmor/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lpvmor {
namespace {

void check_matrix(const Mat& m, Eigen::Index rows, Eigen::Index cols, std::size_t k, const char* name)
{
    if (m.rows() != rows || m.cols() != cols)
        throw Error("dimension mismatch at point " + std::to_string(k) + ": " + name + " is " +
                    std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ", expected " +
                    std::to_string(rows) + "x" + std::to_string(cols));
    if (!m.allFinite())
        throw Error("non-finite entry at point " + std::to_string(k) + " in " + name);
}

void check_grid(const std::vector<double>& grid, double rate_bound)
{
    if (grid.size() < 2) throw Error("grid needs at least 2 points");
    for (double r : grid)
        if (!std::isfinite(r)) throw Error("non-finite grid value");
    for (std::size_t k = 1; k < grid.size(); ++k)
        if (!(grid[k] > grid[k - 1]))
            throw Error("non-monotone grid at point " + std::to_string(k));
    if (!(rate_bound >= 0.0) || !std::isfinite(rate_bound)) throw Error("rate_bound must be finite and >= 0");
}

template <class Model>
void check_points(const Model& m)
{
    if (m.n_x < 0 || m.n_u < 0 || m.n_y < 0) throw Error("negative dimension");
    check_grid(m.rho_grid, m.rate_bound);
    if (m.points.size() != m.rho_grid.size())
        throw Error("point count " + std::to_string(m.points.size()) + " differs from grid length " +
                    std::to_string(m.rho_grid.size()));
    for (std::size_t k = 0; k < m.points.size(); ++k) {
        const auto& p = m.points[k];
        if (p.rho != m.rho_grid[k]) throw Error("rho of point " + std::to_string(k) + " differs from rho_grid");
        check_matrix(p.A, m.n_x, m.n_x, k, "A");
        check_matrix(p.B, m.n_x, m.n_u, k, "B");
        check_matrix(p.C, m.n_y, m.n_x, k, "C");
        check_matrix(p.D, m.n_y, m.n_u, k, "D");
    }
}

} // namespace

void validate(const GridLpvModel& model) { check_points(model); }

void validate(const ReducedLpvModel& model)
{
    check_points(model);
    if (model.vertex_points.size() != 2 * model.rho_grid.size())
        throw Error("reduced model needs exactly 2N vertex matrices");
    for (std::size_t k = 0; k < model.rho_grid.size(); ++k) {
        for (int s = 0; s < 2; ++s) {
            const auto& v = model.vertex(k, s);
            const double nu = s == 0 ? -model.rate_bound : model.rate_bound;
            if (v.rho != model.rho_grid[k] || v.rhodot != nu)
                throw Error("vertex " + std::to_string(2 * k + s) + " has wrong (rho, rhodot)");
            check_matrix(v.A, model.n_x, model.n_x, k, "vertex A");
        }
    }
}

std::size_t bracket(const std::vector<double>& grid, double rho)
{
    if (!(rho >= grid.front() && rho <= grid.back()))
        throw Error("rho = " + std::to_string(rho) + " outside [" + std::to_string(grid.front()) + ", " +
                    std::to_string(grid.back()) + "]");
    auto it = std::upper_bound(grid.begin(), grid.end(), rho);
    std::size_t k = static_cast<std::size_t>(it - grid.begin());
    if (k == 0) return 0;
    k -= 1;
    return std::min(k, grid.size() - 2);
}

LtiSnapshot interpolate(const GridLpvModel& model, double rho)
{
    const std::size_t k = bracket(model.rho_grid, rho);
    const auto& p0 = model.points[k];
    const auto& p1 = model.points[k + 1];
    if (rho == p0.rho) return p0;
    if (rho == p1.rho) return p1;
    const double theta = (p1.rho - rho) / (p1.rho - p0.rho);
    const double w = 1.0 - theta;
    return LtiSnapshot{rho, theta * p0.A + w * p1.A, theta * p0.B + w * p1.B, theta * p0.C + w * p1.C,
                       theta * p0.D + w * p1.D};
}

LtiSnapshot interpolate(const ReducedLpvModel& model, double rho, double rhodot)
{
    const std::size_t k = bracket(model.rho_grid, rho);
    const double delta = model.rate_bound;
    auto a_at = [&](std::size_t j) -> Mat {
        const Mat& lo = model.vertex(j, 0).A;
        const Mat& hi = model.vertex(j, 1).A;
        if (rhodot == 0.0 || delta == 0.0) return model.points[j].A;
        const double t = 0.5 * (rhodot / delta + 1.0);
        return (1.0 - t) * lo + t * hi;
    };
    const auto& p0 = model.points[k];
    const auto& p1 = model.points[k + 1];
    if (rho == p0.rho) return LtiSnapshot{rho, a_at(k), p0.B, p0.C, p0.D};
    if (rho == p1.rho) return LtiSnapshot{rho, a_at(k + 1), p1.B, p1.C, p1.D};
    const double theta = (p1.rho - rho) / (p1.rho - p0.rho);
    const double w = 1.0 - theta;
    return LtiSnapshot{rho, theta * a_at(k) + w * a_at(k + 1), theta * p0.B + w * p1.B, theta * p0.C + w * p1.C,
                       theta * p0.D + w * p1.D};
}

GridLpvModel frozen_model(const ReducedLpvModel& model)
{
    GridLpvModel g;
    g.n_x = model.n_x;
    g.n_u = model.n_u;
    g.n_y = model.n_y;
    g.rho_grid = model.rho_grid;
    g.rate_bound = model.rate_bound;
    g.points = model.points;
    return g;
}

} // namespace lpvmor
