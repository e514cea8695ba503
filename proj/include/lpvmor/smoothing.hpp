#pragma once

#include <string>
#include <vector>

#include "lpvmor/model.hpp"
#include "lpvmor/tracking.hpp"

namespace lpvmor {

/// Eigenvector blocks V_{k,g} of one multiplicity group, one n_x x d matrix per grid point.
using BlockSequence = std::vector<CMat>;

struct RepairRecord {
    int group = -1;
    std::vector<std::size_t> points; ///< grid points whose eigen-data were replaced
    bool averaged = false;           ///< near-constant pole replaced by its average
    double max_relative_perturbation = 0.0;
};

struct SmoothingReport {
    std::size_t start_point = 0;
    /// residuals[g][k] = ||Vbar_{k,g} - Vbar_{k+1,g}||_F after smoothing,
    /// residuals_before[g][k] the same for the raw blocks.
    std::vector<std::vector<double>> residuals;
    std::vector<std::vector<double>> residuals_before;
    double max_derivative_before = 0.0;
    double mean_derivative_before = 0.0;
    double max_derivative_after = 0.0;
    double mean_derivative_after = 0.0;
    std::vector<RepairRecord> repairs;
    std::vector<std::string> warnings;
};

/// Minimiser of ||V_prev - V_next Q||_F over complex d x d matrices Q, evaluated
/// through the real embedding [[Re V, -Im V], [Im V, Re V]] and its pseudoinverse.
/// Throws Error ("eigenspace discontinuity") when cond(Q) > cond_max.
CMat procrustes_step(const CMat& v_prev, const CMat& v_next, double cond_max = 1e8);

/// argmin_k cond(V_k), smallest index on ties.
std::size_t choose_start(const std::vector<double>& conditions);
std::size_t choose_start(const ModeTrajectorySet& traj);

/// Replaces complex data of transition groups by real eigen-data (real parts of
/// the eigenvalues, or their average for a near-constant pole, and the real
/// basis [Re v, Im v] of each pair). Throws Error (stage "smoothing") when the
/// induced change of some A_k exceeds `budget` relative to ||A_k||.
std::vector<RepairRecord> repair_complex_real(ModeTrajectorySet& traj, std::vector<MultiplicityGroup>& groups,
                                              const GridLpvModel& model, double budget = 1e-3);

/// Raw blocks per group: member columns for real groups (made real when needed),
/// canonical columns for complex groups.
std::vector<BlockSequence> group_sequences(const ModeTrajectorySet& traj, const std::vector<MultiplicityGroup>& groups);

/// Procrustes alignment of every sequence, outward from `start` in both directions.
/// Fills start_point, residuals, residuals_before and norm-drift warnings.
std::vector<BlockSequence> smooth_sequences(const std::vector<BlockSequence>& raw, std::size_t start,
                                            SmoothingReport& report, Exec exec = Exec::parallel);

} // namespace lpvmor
