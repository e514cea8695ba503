#pragma once

#include <filesystem>
#include <vector>

#include "lpvmor/common.hpp"

namespace lpvmor {

/// Frozen LTI system (A, B, C, D) at a single scheduling value.
struct LtiSnapshot {
    double rho = 0.0;
    Mat A, B, C, D;

    Eigen::Index n_x() const { return A.rows(); }
    Eigen::Index n_u() const { return B.cols(); }
    Eigen::Index n_y() const { return C.rows(); }
};

using GridPoint = LtiSnapshot;

/// LPV model sampled on a strictly increasing scheduling grid, linearly
/// interpolated in between, with |d rho/dt| <= rate_bound.
struct GridLpvModel {
    int n_x = 0;
    int n_u = 0;
    int n_y = 0;
    std::vector<double> rho_grid;
    double rate_bound = 0.0;
    std::vector<GridPoint> points;

    std::size_t size() const { return rho_grid.size(); }
    double rho_min() const { return rho_grid.front(); }
    double rho_max() const { return rho_grid.back(); }
};

/// A matrix at one (rho_k, nu_s) vertex of the grid times rate box.
struct VertexPoint {
    double rho = 0.0;
    double rhodot = 0.0;
    Mat A;
};

/// Reduced model. The state matrix depends on rho and rho-dot: for every grid
/// point k there are two vertices, nu = -delta (index 2k) and nu = +delta
/// (index 2k+1). `points[k].A` holds the frozen (rho-dot = 0) matrix, which is
/// the average of the two vertices.
struct ReducedLpvModel {
    int n_x = 0;
    int n_u = 0;
    int n_y = 0;
    std::vector<double> rho_grid;
    double rate_bound = 0.0;
    std::vector<GridPoint> points;
    std::vector<VertexPoint> vertex_points;
    int unstable_states = 0;
    int integrators = 0;

    std::size_t size() const { return rho_grid.size(); }
    double rho_min() const { return rho_grid.front(); }
    double rho_max() const { return rho_grid.back(); }
    const VertexPoint& vertex(std::size_t k, int s) const { return vertex_points[2 * k + static_cast<std::size_t>(s)]; }
};

/// Throws Error when an invariant of the model is violated.
void validate(const GridLpvModel& model);
void validate(const ReducedLpvModel& model);

/// Entrywise linear interpolation between the bracketing grid points.
LtiSnapshot interpolate(const GridLpvModel& model, double rho);

/// Frozen snapshot of the reduced model at (rho, rhodot): linear in rho between
/// grid points and linear in rho-dot between the two rate vertices.
LtiSnapshot interpolate(const ReducedLpvModel& model, double rho, double rhodot = 0.0);

/// The reduced model viewed at rho-dot = 0 as an ordinary grid model.
GridLpvModel frozen_model(const ReducedLpvModel& model);

/// Index k with rho_grid[k] <= rho <= rho_grid[k+1]; throws when rho is out of range.
std::size_t bracket(const std::vector<double>& grid, double rho);

GridLpvModel load_model(const std::filesystem::path& path);
ReducedLpvModel load_reduced_model(const std::filesystem::path& path);
/// True when the file carries rate-vertex data.
bool is_reduced_model_file(const std::filesystem::path& path);
void save_model(const GridLpvModel& model, const std::filesystem::path& path);
void save_model(const ReducedLpvModel& model, const std::filesystem::path& path);

} // namespace lpvmor
