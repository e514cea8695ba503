#pragma once

#include <string>
#include <vector>

#include "lpvmor/gramian.hpp"
#include "lpvmor/model.hpp"

namespace lpvmor {

/// Per grid point: Xo = Ro^T Ro (Ro upper), Xc = Rc Rc^T (Rc lower), and an
/// SVD Ro Rc = U diag(S) V^T whose columns are aligned across the grid.
struct BalancingFactors {
    std::vector<double> rho;
    std::vector<Mat> Ro, Rc;
    std::vector<Mat> U, V;
    std::vector<Vec> S;
    std::vector<std::string> warnings;

    /// max_k S_k(j) for each column j.
    std::vector<double> profile() const;
};

/// Cholesky factors with positive diagonals. Throws Error naming k when a
/// Gramian is not positive definite.
BalancingFactors factorize(const AffineGramian& xo, const AffineGramian& xc, const std::vector<double>& rho,
                           Exec exec = Exec::parallel);

struct AlignedSvd {
    std::vector<Mat> U, V;
    std::vector<Vec> S;
    std::vector<std::string> warnings;
};

/// SVD per matrix, then columns matched to the previous point by maximal
/// |u_i^T u_j| and signs flipped so consecutive columns have u_prev^T u >= 0.
AlignedSvd smooth_svd(const std::vector<Mat>& products, Exec exec = Exec::parallel);

/// Fills U, S, V of `f` from the products Ro Rc and orders the columns by
/// decreasing profile.
void align_factors(BalancingFactors& f, Exec exec = Exec::parallel);

struct OrderSelection {
    int kept = 0;
    int dimension = 0;
    std::vector<double> profile;
    std::string rule; ///< "threshold", "explicit" or "exempt"
    bool residualize = false;
};

/// Threshold rule keeps j with profile_j > eta * profile_0; an explicit order
/// (>= 0) overrides it; dimension <= 2 keeps everything.
OrderSelection select_order(const std::vector<double>& profile, double eta = 1e-2, int explicit_order = -1,
                            bool residualize = false);

/// Reduced cluster: vertex state matrices (index 2k+s), frozen B, C, D.
struct ReducedSubsystem {
    std::vector<double> rho;
    double rate_bound = 0.0;
    std::vector<Mat> A_vertex, B, C, D;
    int kept = 0;
    double balancing_error = 0.0; ///< worst relative error of the two congruences
    std::vector<std::string> warnings;

    Eigen::Index n_x() const { return static_cast<Eigen::Index>(kept); }
};

ReducedSubsystem balance_and_truncate(const Subsystem& sub, const BalancingFactors& factors,
                                      const OrderSelection& selection, const AffineGramian& xo,
                                      const AffineGramian& xc, Exec exec = Exec::parallel);

/// Unreduced pass-through of a subsystem (A + E1 nu at the vertices).
ReducedSubsystem passthrough(const Subsystem& sub);

/// Block-diagonal concatenation. D is taken from the first part (all parts carry the full D).
ReducedLpvModel reassemble(const std::vector<ReducedSubsystem>& parts, const std::vector<double>& rho,
                           double rate_bound, const std::vector<Mat>& d, int unstable_states, int integrators);

/// "j,k,rho,sigma" rows.
std::string singular_values_csv(const BalancingFactors& f);

} // namespace lpvmor
