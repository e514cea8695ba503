#pragma once

#include <string>
#include <vector>

#include "lpvmor/common.hpp"
#include "lpvmor/model.hpp"

namespace lpvmor {

/// Per-grid-point eigen-decompositions in solver order.
struct EigenGrid {
    std::vector<double> rho;
    std::vector<CVec> values;
    std::vector<CMat> vectors;
    std::vector<double> condition;

    std::size_t size() const { return rho.size(); }
};

/// Throws Error naming the grid point when some A_k is near-defective.
EigenGrid decompose_grid(const GridLpvModel& model, Exec exec = Exec::parallel, double cond_max = 1e12);

struct TrackingConfig {
    double sampling_time = 0.0; ///< <= 0 selects the automatic rule
    bool mac_weighting = true;
    double tol_int = 1e-8;
    double multiplicity_threshold = 1e-4;
};

/// min(0.01, 0.5 / max |lambda|) over all non-integrator eigenvalues.
double auto_sampling_time(const EigenGrid& grid, double tol_int);

/// exp(lambda Ts) for Re(lambda) < 0, its reflection 1/conj(exp(lambda Ts)) otherwise.
cplx to_disk(cplx lambda, double ts);

/// Pseudo-hyperbolic distance |z1 - z2| / |1 - conj(z1) z2| on the open unit disk.
double hyperbolic_distance(cplx z1, cplx z2);

/// h(to_disk(l1), to_disk(l2)) times (1 - |v1* v2|) when `mac` is set.
double weighted_distance(cplx l1, const CVec& v1, cplx l2, const CVec& v2, double ts, bool mac);

/// Assignment costs c(i, j) between the eigenpairs at two consecutive grid points.
Mat transition_costs(const CVec& l1, const CMat& v1, const CVec& l2, const CMat& v2, double ts, bool mac,
                     Exec exec = Exec::parallel);

enum class ModeClass { stable, unstable, mixed, integrator };

std::string to_string(ModeClass c);

/// True when |Im z| <= 1e-12 max(1, |z|).
bool is_real_value(cplx z);

/// Eigenvalue trajectories in a consistent order across the grid: trajectory i
/// at grid point k is values[k](i) with eigenvector vectors[k].col(i).
struct ModeTrajectorySet {
    std::vector<double> rho;
    double sampling_time = 0.0;
    std::vector<CVec> values;
    std::vector<CMat> vectors;
    std::vector<ModeClass> mode_class;
    std::vector<int> partner; ///< conjugate partner, -1 for real trajectories
    std::vector<int> group;   ///< multiplicity group, -1 until detect_multiplicity

    int size() const { return values.empty() ? 0 : static_cast<int>(values.front().size()); }
    std::size_t grid_size() const { return rho.size(); }
    cplx value(std::size_t k, int i) const { return values[k](i); }
    std::vector<int> integrators() const;
};

/// Integrator eigen-indices at each grid point. The count must be the same at every point.
std::vector<std::vector<int>> detect_integrators(const EigenGrid& grid, double tol_int);

/// Successive minimum-cost matching from the first grid point. Integrators are
/// matched by index order and kept out of the assignment problem.
ModeTrajectorySet match_grid(const EigenGrid& grid, const TrackingConfig& config, Exec exec = Exec::parallel);

/// Disk images z(k, i) of the trajectories (integrators map to 0).
CMat disk_values(const ModeTrajectorySet& traj);

/// H(i, j) = min(max_k h(z_ki, z_kj), max_k h(z_ki, conj z_kj)), with optional
/// MAC weighting of each term. Pairs involving integrators are left at 0.
Mat trajectory_distances(const ModeTrajectorySet& traj, bool mac = false, Exec exec = Exec::parallel);

double trajectory_distance(const ModeTrajectorySet& traj, int i, int j, bool mac = false);

enum class GroupKind { real, complex, transition };

struct MultiplicityGroup {
    std::vector<int> members;   ///< sorted trajectory ids
    std::vector<int> canonical; ///< complex groups: one member per conjugate pair
    GroupKind kind = GroupKind::real;
    int dimension = 0;          ///< number of eigenspace directions (pairs count once)
    ModeClass mode_class = ModeClass::stable;
};

/// Groups trajectories with pairwise H below the threshold (union-find over
/// pairs; conjugate partners always share a group, integrators form one group).
/// Sets traj.group. Groups are ordered by their smallest member.
std::vector<MultiplicityGroup> detect_multiplicity(ModeTrajectorySet& traj, const Mat& h, double threshold);

/// CSV rows (k, rho, traj_index, re_lambda, im_lambda, stability_label).
std::string trajectories_csv(const ModeTrajectorySet& traj);

} // namespace lpvmor
