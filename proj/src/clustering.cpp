#include "lpvmor/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace lpvmor {
namespace {

struct Candidate {
    double height = std::numeric_limits<double>::infinity();
    int other = -1;
};

bool before(double h1, int a1, int b1, double h2, int a2, int b2)
{
    if (h1 != h2) return h1 < h2;
    if (a1 != a2) return a1 < a2;
    return b1 < b2;
}

std::vector<int> leaf_sets_root(const Dendrogram& dg, std::vector<std::vector<int>>& members)
{
    const int n = dg.leaves;
    members.assign(static_cast<std::size_t>(n + static_cast<int>(dg.merges.size())), {});
    for (int i = 0; i < n; ++i) members[static_cast<std::size_t>(i)] = {i};
    std::vector<int> alive(members.size(), 0);
    for (int i = 0; i < n; ++i) alive[static_cast<std::size_t>(i)] = 1;
    return alive;
}

} // namespace

Dendrogram hac_complete_link(const Mat& d)
{
    const int n = static_cast<int>(d.rows());
    if (d.cols() != n) throw Error("hac_complete_link: distance matrix must be square", "clustering");
    Dendrogram dg;
    dg.leaves = n;
    if (n < 2) return dg;
    const int total = 2 * n - 1;
    Mat dist = Mat::Constant(total, total, std::numeric_limits<double>::infinity());
    dist.topLeftCorner(n, n) = d;
    std::vector<char> active(static_cast<std::size_t>(total), 0);
    for (int i = 0; i < n; ++i) active[static_cast<std::size_t>(i)] = 1;
    std::vector<Candidate> best(static_cast<std::size_t>(total));

    // Candidate of cluster a: the active b > a minimising (L, b).
    auto rescan = [&](int a) {
        Candidate c;
        for (int b = a + 1; b < total; ++b) {
            if (!active[static_cast<std::size_t>(b)]) continue;
            if (dist(a, b) < c.height) {
                c.height = dist(a, b);
                c.other = b;
            }
        }
        best[static_cast<std::size_t>(a)] = c;
    };
    for (int a = 0; a < n; ++a) rescan(a);

    for (int step = 0; step < n - 1; ++step) {
        int a = -1;
        for (int i = 0; i < total; ++i) {
            if (!active[static_cast<std::size_t>(i)] || best[static_cast<std::size_t>(i)].other < 0) continue;
            const Candidate& c = best[static_cast<std::size_t>(i)];
            if (a < 0 || before(c.height, i, c.other, best[static_cast<std::size_t>(a)].height, a,
                                best[static_cast<std::size_t>(a)].other))
                a = i;
        }
        const int b = best[static_cast<std::size_t>(a)].other;
        const double h = best[static_cast<std::size_t>(a)].height;
        const int id = n + step;
        dg.merges.push_back({a, b, h, id});
        active[static_cast<std::size_t>(a)] = 0;
        active[static_cast<std::size_t>(b)] = 0;
        for (int x = 0; x < id; ++x) {
            if (!active[static_cast<std::size_t>(x)]) continue;
            const double v = std::max(dist(x, a), dist(x, b));
            dist(x, id) = v;
            dist(id, x) = v;
        }
        active[static_cast<std::size_t>(id)] = 1;
        for (int x = 0; x < id; ++x) {
            if (!active[static_cast<std::size_t>(x)]) continue;
            Candidate& c = best[static_cast<std::size_t>(x)];
            if (c.other == a || c.other == b) rescan(x);
            else if (dist(x, id) < c.height) c = {dist(x, id), id};
        }
        best[static_cast<std::size_t>(id)] = Candidate{};
    }
    return dg;
}

std::vector<std::vector<int>> cut_at(const Dendrogram& dg, double threshold)
{
    std::vector<std::vector<int>> members;
    std::vector<int> alive = leaf_sets_root(dg, members);
    for (const auto& m : dg.merges) {
        if (!(m.height <= threshold)) continue;
        auto& dst = members[static_cast<std::size_t>(m.id)];
        dst = members[static_cast<std::size_t>(m.a)];
        dst.insert(dst.end(), members[static_cast<std::size_t>(m.b)].begin(), members[static_cast<std::size_t>(m.b)].end());
        alive[static_cast<std::size_t>(m.a)] = 0;
        alive[static_cast<std::size_t>(m.b)] = 0;
        alive[static_cast<std::size_t>(m.id)] = 1;
    }
    std::vector<std::vector<int>> out;
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (!alive[i]) continue;
        std::vector<int> c = members[i];
        std::sort(c.begin(), c.end());
        out.push_back(std::move(c));
    }
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.front() < y.front(); });
    return out;
}

CutResult cut(const Dendrogram& dg, double threshold, int max_size)
{
    if (max_size < 2) throw Error("max_cluster_size must be >= 2", "clustering");
    CutResult r;
    double root = 0.0;
    for (const auto& m : dg.merges) root = std::max(root, m.height);
    r.threshold = (std::isnan(threshold) || threshold < 0.0) ? root : threshold;
    std::vector<double> heights;
    for (const auto& m : dg.merges) heights.push_back(m.height);
    std::sort(heights.begin(), heights.end());
    heights.erase(std::unique(heights.begin(), heights.end()), heights.end());
    while (true) {
        r.clusters = cut_at(dg, r.threshold);
        std::size_t largest = 0;
        for (const auto& c : r.clusters) largest = std::max(largest, c.size());
        if (largest <= static_cast<std::size_t>(max_size) || r.threshold <= 0.0) break;
        auto it = std::lower_bound(heights.begin(), heights.end(), r.threshold);
        r.threshold = it == heights.begin() ? 0.0 : *std::prev(it);
        r.threshold = std::max(r.threshold, 0.0);
        r.lowered = true;
    }
    return r;
}

Mat cophenetic_matrix(const Dendrogram& dg)
{
    const int n = dg.leaves;
    Mat c = Mat::Zero(n, n);
    std::vector<std::vector<int>> members;
    leaf_sets_root(dg, members);
    for (const auto& m : dg.merges) {
        const auto& ma = members[static_cast<std::size_t>(m.a)];
        const auto& mb = members[static_cast<std::size_t>(m.b)];
        for (int i : ma)
            for (int j : mb) {
                c(i, j) = m.height;
                c(j, i) = m.height;
            }
        auto& dst = members[static_cast<std::size_t>(m.id)];
        dst = ma;
        dst.insert(dst.end(), mb.begin(), mb.end());
    }
    return c;
}

double cophenetic_coefficient(const Dendrogram& dg, const Mat& d)
{
    const int n = dg.leaves;
    if (n < 3) throw Error("cophenetic coefficient needs at least 3 leaves", "clustering");
    const Mat c = cophenetic_matrix(dg);
    const auto pairs = static_cast<double>(n) * (n - 1) / 2.0;
    double md = 0.0, mc = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            md += d(i, j);
            mc += c(i, j);
        }
    md /= pairs;
    mc /= pairs;
    double sdc = 0.0, sdd = 0.0, scc = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double x = d(i, j) - md, y = c(i, j) - mc;
            sdc += x * y;
            sdd += x * x;
            scc += y * y;
        }
    if (sdd == 0.0 || scc == 0.0) return sdd == scc ? 1.0 : 0.0;
    return sdc / std::sqrt(sdd * scc);
}

Mat clustering_distances(const Mat& h, const std::vector<int>& trajectories, const ModeTrajectorySet& traj,
                         const ModalForm& modal, const ClusterConfig& config)
{
    const auto n = static_cast<Eigen::Index>(trajectories.size());
    Mat d(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const int ti = trajectories[static_cast<std::size_t>(i)];
            const int tj = trajectories[static_cast<std::size_t>(j)];
            d(i, j) = traj.group[static_cast<std::size_t>(ti)] == traj.group[static_cast<std::size_t>(tj)] ? 0.0 : h(ti, tj);
        }
    if (config.e2_penalty_weight > 0.0 && !modal.neglect_coupling) {
        // Coupling energy between the modal blocks holding two trajectories;
        // strongly coupled modes are pulled together so that less of E lands in E2.
        std::vector<const ModalBlock*> block_of(static_cast<std::size_t>(traj.size()), nullptr);
        for (const auto& b : modal.blocks)
            for (int t : b.trajectories) block_of[static_cast<std::size_t>(t)] = &b;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j) {
                const ModalBlock* bi = block_of[static_cast<std::size_t>(trajectories[static_cast<std::size_t>(i)])];
                const ModalBlock* bj = block_of[static_cast<std::size_t>(trajectories[static_cast<std::size_t>(j)])];
                if (bi == bj) continue;
                double energy = 0.0;
                for (std::size_t k = 0; k < modal.size(); ++k) {
                    const Mat e = modal.E(k, 1);
                    energy = std::max(energy, e.block(bi->offset, bj->offset, bi->size, bj->size).squaredNorm() +
                                                  e.block(bj->offset, bi->offset, bj->size, bi->size).squaredNorm());
                }
                const double v = std::max(0.0, d(i, j) - config.e2_penalty_weight * energy);
                d(i, j) = v;
                d(j, i) = v;
            }
    }
    return d;
}

Mat permutation_matrix(const std::vector<Eigen::Index>& perm)
{
    const auto n = static_cast<Eigen::Index>(perm.size());
    Mat p = Mat::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) p(perm[static_cast<std::size_t>(i)], i) = 1.0;
    return p;
}

ClusterPartition permute_and_split(const ModalForm& modal, const std::vector<std::vector<int>>& clusters, Exec exec)
{
    ClusterPartition cp;
    cp.clusters = clusters;
    const Eigen::Index n = modal.n_x();
    const std::vector<int> st = state_trajectories(modal);
    std::vector<int> traj_cluster;
    for (std::size_t c = 0; c < clusters.size(); ++c)
        for (int t : clusters[c]) {
            if (static_cast<std::size_t>(t) >= traj_cluster.size()) traj_cluster.resize(static_cast<std::size_t>(t) + 1, -1);
            traj_cluster[static_cast<std::size_t>(t)] = static_cast<int>(c);
        }
    auto cluster_of_state = [&](Eigen::Index s) {
        const int t = st[static_cast<std::size_t>(s)];
        return static_cast<std::size_t>(t) < traj_cluster.size() ? traj_cluster[static_cast<std::size_t>(t)] : -1;
    };
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        const auto offset = static_cast<Eigen::Index>(cp.perm.size());
        for (Eigen::Index s = 0; s < n; ++s)
            if (cluster_of_state(s) == static_cast<int>(c)) cp.perm.push_back(s);
        cp.ranges.emplace_back(offset, static_cast<Eigen::Index>(cp.perm.size()) - offset);
    }
    cp.preserved_offset = static_cast<Eigen::Index>(cp.perm.size());
    for (Eigen::Index s = 0; s < n; ++s)
        if (cluster_of_state(s) < 0) cp.perm.push_back(s);
    cp.preserved_size = n - cp.preserved_offset;

    // Segment id of each permuted state; E1 keeps entries within a segment.
    std::vector<int> seg(static_cast<std::size_t>(n), static_cast<int>(clusters.size()));
    for (std::size_t c = 0; c < cp.ranges.size(); ++c)
        for (Eigen::Index i = 0; i < cp.ranges[c].second; ++i) seg[static_cast<std::size_t>(cp.ranges[c].first + i)] = static_cast<int>(c);

    const std::size_t nk = modal.size();
    cp.A.resize(nk);
    cp.B.resize(nk);
    cp.C.resize(nk);
    cp.D.resize(nk);
    cp.E_unit.resize(nk);
    cp.E1_unit.resize(nk);
    cp.E2_unit.resize(nk);
    cp.e2_norms.resize(nk);
    const auto& perm = cp.perm;
    for_each_index(exec, static_cast<std::ptrdiff_t>(nk), [&](std::ptrdiff_t ki) {
        const auto k = static_cast<std::size_t>(ki);
        Mat a(n, n), e(n, n), b(n, modal.B[k].cols()), c(modal.C[k].rows(), n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Index pi_ = perm[static_cast<std::size_t>(i)];
            b.row(i) = modal.B[k].row(pi_);
            c.col(i) = modal.C[k].col(pi_);
            for (Eigen::Index j = 0; j < n; ++j) {
                const Eigen::Index pj = perm[static_cast<std::size_t>(j)];
                a(i, j) = modal.A[k](pi_, pj);
                e(i, j) = modal.neglect_coupling ? 0.0 : modal.E_unit[k](pi_, pj);
            }
        }
        Mat e1 = Mat::Zero(n, n), e2 = Mat::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                (seg[static_cast<std::size_t>(i)] == seg[static_cast<std::size_t>(j)] ? e1 : e2)(i, j) = e(i, j);
        cp.e2_norms[k] = spectral_norm(e2) * modal.rate_bound;
        cp.A[k] = std::move(a);
        cp.B[k] = std::move(b);
        cp.C[k] = std::move(c);
        cp.D[k] = modal.D[k];
        cp.E_unit[k] = std::move(e);
        cp.E1_unit[k] = std::move(e1);
        cp.E2_unit[k] = std::move(e2);
    });
    return cp;
}

Subsystem ClusterPartition::subsystem(std::size_t c, const std::vector<double>& rho, double rate_bound) const
{
    const auto [offset, size] = c < ranges.size() ? ranges[c] : std::make_pair(preserved_offset, preserved_size);
    Subsystem s;
    s.rho = rho;
    s.rate_bound = rate_bound;
    for (std::size_t k = 0; k < A.size(); ++k) {
        s.A.push_back(A[k].block(offset, offset, size, size));
        s.E1_unit.push_back(E1_unit[k].block(offset, offset, size, size));
        s.B.push_back(B[k].middleRows(offset, size));
        s.C.push_back(C[k].middleCols(offset, size));
        s.D.push_back(D[k]);
    }
    if (c < clusters.size()) s.trajectories = clusters[c];
    return s;
}

std::string dendrogram_text(const Dendrogram& dg)
{
    std::ostringstream out;
    out.precision(17);
    for (const auto& m : dg.merges) out << m.a << ' ' << m.b << ' ' << m.height << ' ' << m.id << '\n';
    return out.str();
}

} // namespace lpvmor
