#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lpvmor/modal.hpp"

namespace lpvmor {

/// Merge of clusters a < b at linkage height L into cluster `id`. Leaves are
/// 0..n-1, merged clusters are numbered n, n+1, ... in merge order.
struct Merge {
    int a = 0;
    int b = 0;
    double height = 0.0;
    int id = 0;
};

struct Dendrogram {
    int leaves = 0;
    std::vector<Merge> merges;
};

/// Complete-linkage agglomeration on a symmetric distance matrix. At each step
/// the pair with the smallest (L, a, b) merges. Keeps the nearest candidate of
/// every active cluster so that a step only rescans rows whose candidate died.
Dendrogram hac_complete_link(const Mat& d);

/// Clusters (lists of leaves, each sorted, ordered by smallest leaf) formed by
/// all merges with height <= threshold.
std::vector<std::vector<int>> cut_at(const Dendrogram& dg, double threshold);

struct CutResult {
    std::vector<std::vector<int>> clusters;
    double threshold = 0.0;
    bool lowered = false;
};

/// Cuts at `threshold` (negative or NaN: start from the root height). While some
/// cluster has more than max_size leaves the threshold drops to the next lower
/// merge height. Merges at height 0 are always kept.
CutResult cut(const Dendrogram& dg, double threshold, int max_size);

/// Pearson correlation between d(i, j) and the cophenetic (merge-height)
/// distance over all leaf pairs. Throws Error for fewer than 3 leaves.
double cophenetic_coefficient(const Dendrogram& dg, const Mat& d);

/// Cophenetic distance matrix of the dendrogram.
Mat cophenetic_matrix(const Dendrogram& dg);

struct ClusterConfig {
    double cut_threshold = -1.0; ///< negative selects the automatic cut
    int max_cluster_size = 40;
    double e2_penalty_weight = 0.0;
    bool mac_weighted_distance = false;
};

/// Distance matrix over the given trajectories, with zero distance inside each
/// multiplicity group and the optional coupling penalty applied.
Mat clustering_distances(const Mat& h, const std::vector<int>& trajectories, const ModeTrajectorySet& traj,
                         const ModalForm& modal, const ClusterConfig& config);

/// Cluster subsystem in permuted coordinates. The frozen state matrix at
/// (k, s) is A[k] + E1_unit[k] * nu_s.
struct Subsystem {
    std::vector<double> rho;
    double rate_bound = 0.0;
    std::vector<Mat> A, E1_unit, B, C, D;
    std::vector<int> trajectories;

    Eigen::Index n_x() const { return A.empty() ? 0 : A.front().rows(); }
    double nu(int s) const { return s == 0 ? -rate_bound : rate_bound; }
    Mat vertex_A(std::size_t k, int s) const { return A[k] + E1_unit[k] * nu(s); }
};

struct ClusterPartition {
    std::vector<std::vector<int>> clusters; ///< trajectory ids per cluster
    double threshold = 0.0;
    std::vector<Eigen::Index> perm;         ///< permuted state i is modal state perm[i]
    std::vector<std::pair<Eigen::Index, Eigen::Index>> ranges; ///< (offset, size) per cluster
    Eigen::Index preserved_offset = 0;
    Eigen::Index preserved_size = 0;
    std::vector<Mat> A, B, C, D;            ///< permuted modal grid matrices
    std::vector<Mat> E_unit, E1_unit, E2_unit;
    std::vector<double> e2_norms;           ///< ||E2(k, +delta)||_2 per grid point

    /// Cluster c, or the preserved segment for c = clusters.size().
    Subsystem subsystem(std::size_t c, const std::vector<double>& rho, double rate_bound) const;
};

/// Permutation matrix P with P(perm[i], i) = 1, so that Atilde = P^T Abar P.
Mat permutation_matrix(const std::vector<Eigen::Index>& perm);

/// Orders the states cluster by cluster (then the preserved non-stable states as
/// one final segment) and splits E into its within-segment part E1 and the rest E2.
/// When modal.neglect_coupling is set, E is taken as zero.
ClusterPartition permute_and_split(const ModalForm& modal, const std::vector<std::vector<int>>& clusters,
                                   Exec exec = Exec::parallel);

/// JSON-ready text: one line per merge "a b height id".
std::string dendrogram_text(const Dendrogram& dg);

} // namespace lpvmor
