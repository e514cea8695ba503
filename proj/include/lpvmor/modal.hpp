#pragma once

#include <string>
#include <vector>

#include "lpvmor/model.hpp"
#include "lpvmor/simulation.hpp"
#include "lpvmor/smoothing.hpp"
#include "lpvmor/spline.hpp"
#include "lpvmor/tracking.hpp"

namespace lpvmor {

/// One diagonal block of the modal form.
struct ModalBlock {
    int group = -1;
    Eigen::Index offset = 0;
    Eigen::Index size = 0;
    bool complex = false;
    ModeClass mode_class = ModeClass::stable;
    std::vector<int> trajectories; ///< trajectory id of each state in the block
};

/// Local transforms, block layout and the modal-coordinate grid model.
/// The coupling term at vertex (k, s) is E(k, s) = E_unit[k] * nu_s.
struct ModalForm {
    std::vector<double> rho;
    double rate_bound = 0.0;
    std::vector<Mat> T, T_inv, dT;
    CubicSpline spline;
    std::vector<ModalBlock> blocks;
    std::vector<Mat> A, B, C, D;
    std::vector<Mat> E_unit;
    std::vector<double> offblock_residual; ///< ||offblock(T^-1 A T)||_F / ||Abar||_F per point
    bool neglect_coupling = false;

    Eigen::Index n_x() const { return A.empty() ? 0 : A.front().rows(); }
    std::size_t size() const { return rho.size(); }
    double nu(int s) const { return s == 0 ? -rate_bound : rate_bound; }
    Mat E(std::size_t k, int s) const { return E_unit[k] * nu(s); }
    /// Modal-form grid model (frozen, without the coupling term).
    GridLpvModel as_grid_model() const;
};

/// T_k per grid point: real groups contribute Re(Vbar) (d columns), complex
/// groups [Re Vbar_c, Im Vbar_c] (2d columns), in group order. Throws Error
/// naming k when cond(T_k) > cond_max.
std::vector<Mat> build_local_transforms(const std::vector<BlockSequence>& seq,
                                        const std::vector<MultiplicityGroup>& groups, const ModeTrajectorySet& traj,
                                        std::vector<ModalBlock>* blocks = nullptr, double cond_max = 1e12);

/// Abar_k = block-diagonal part of T_k^-1 A_k T_k, Bbar_k = T_k^-1 B_k,
/// Cbar_k = C_k T_k, E_unit = -T_k^-1 T'(rho_k) with T' from a cubic spline.
ModalForm assemble_modal(const GridLpvModel& model, std::vector<Mat> transforms, std::vector<ModalBlock> blocks,
                         Exec exec = Exec::parallel);

struct DerivativeStats {
    double max = 0.0;  ///< max over knots of max |entry| of dT/drho
    double mean = 0.0; ///< mean over knots of the same quantity
};

DerivativeStats transform_derivative_stats(const std::vector<double>& rho, const std::vector<Mat>& transforms);

struct CouplingConfig {
    double drop_tol = 0.05;
    double max_sweep_time = 200.0;
    long max_steps = 20000;
};

struct CouplingReport {
    std::vector<double> e_norms;      ///< ||E(k, +delta)||_2 per grid point
    std::vector<double> discrepancies; ///< one per excitation
    double discrepancy = 0.0;          ///< max over excitations
    double midpoint_residual = 0.0;    ///< max relative off-grid difference term
    bool drop = true;
    std::string note;
};

/// Compares simulations of the stable modal subsystem with and without E along a
/// triangular scheduling sweep at rate delta, for a unit step and a chirp on each
/// input. Sets modal.neglect_coupling.
CouplingReport coupling_significance(ModalForm& modal, const GridLpvModel& model, const CouplingConfig& config = {},
                                     Exec exec = Exec::parallel);

/// Indices of modal states whose block is stable (reducible).
std::vector<Eigen::Index> stable_states(const ModalForm& modal);

/// Map of modal states to trajectory ids.
std::vector<int> state_trajectories(const ModalForm& modal);

} // namespace lpvmor
