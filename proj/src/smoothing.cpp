#include "lpvmor/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/SVD>

#include "lpvmor/linalg.hpp"

namespace lpvmor {
namespace {

bool has_imaginary_part(const CMat& m) { return m.size() > 0 && m.imag().cwiseAbs().maxCoeff() > 0.0; }

// Orthonormal real basis of the span of columns closed under conjugation.
Mat real_basis(const CMat& v)
{
    const Eigen::Index n = v.rows();
    const Eigen::Index d = v.cols();
    Mat stacked(n, 2 * d);
    stacked << v.real(), v.imag();
    Eigen::JacobiSVD<Mat> svd(stacked, Eigen::ComputeThinU);
    return svd.matrixU().leftCols(d);
}

double relative_perturbation(const Mat& a, const CVec& values, const CMat& vectors)
{
    const CMat vl = vectors * values.asDiagonal();
    const CMat rebuilt = vectors.transpose().partialPivLu().solve(vl.transpose()).transpose();
    const double na = spectral_norm(a);
    const double nd = spectral_norm(rebuilt.real() - a);
    return na > 0.0 ? nd / na : nd;
}

} // namespace

CMat procrustes_step(const CMat& v_prev, const CMat& v_next, double cond_max)
{
    if (v_prev.rows() != v_next.rows() || v_prev.cols() != v_next.cols())
        throw Error("procrustes_step: shape mismatch", "smoothing");
    const Eigen::Index n = v_next.rows();
    const Eigen::Index d = v_next.cols();
    if (d == 0) return CMat(0, 0);
    Mat m(2 * n, 2 * d);
    m << v_next.real(), -v_next.imag(), v_next.imag(), v_next.real();
    Mat r(2 * n, d);
    r << v_prev.real(), v_prev.imag();
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(m);
    const Mat x = cod.solve(r);
    CMat q(d, d);
    q.real() = x.topRows(d);
    q.imag() = x.bottomRows(d);
    const double c = condition_number(q);
    if (!(c <= cond_max)) {
        std::ostringstream msg;
        msg << "eigenspace discontinuity: alignment matrix condition number " << c << " exceeds " << cond_max;
        throw Error(msg.str(), "smoothing");
    }
    return q;
}

std::size_t choose_start(const std::vector<double>& conditions)
{
    std::size_t best = 0;
    for (std::size_t k = 1; k < conditions.size(); ++k)
        if (conditions[k] < conditions[best]) best = k;
    return best;
}

std::size_t choose_start(const ModeTrajectorySet& traj)
{
    std::vector<double> c(traj.grid_size());
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = condition_number(traj.vectors[k]);
    return choose_start(c);
}

std::vector<RepairRecord> repair_complex_real(ModeTrajectorySet& traj, std::vector<MultiplicityGroup>& groups,
                                              const GridLpvModel& model, double budget)
{
    std::vector<RepairRecord> log;
    const std::size_t nk = traj.grid_size();
    for (std::size_t g = 0; g < groups.size(); ++g) {
        MultiplicityGroup& grp = groups[g];
        if (grp.kind != GroupKind::transition) continue;
        RepairRecord rec;
        rec.group = static_cast<int>(g);

        cplx mean(0.0, 0.0);
        for (std::size_t k = 0; k < nk; ++k)
            for (int i : grp.members) mean += traj.values[k](i);
        mean /= static_cast<double>(nk * grp.members.size());
        double spread = 0.0;
        for (std::size_t k = 0; k < nk; ++k)
            for (int i : grp.members) spread = std::max(spread, std::abs(traj.values[k](i) - mean));
        rec.averaged = spread <= 1e-6 * std::max(1.0, std::abs(mean));

        for (std::size_t k = 0; k < nk; ++k) {
            bool touched = rec.averaged;
            for (int i : grp.members) {
                const cplx lam = traj.values[k](i);
                if (is_real_value(lam) || lam.imag() < 0.0) continue;
                int p = -1;
                double best = 0.0;
                for (int j : grp.members) {
                    if (j == i) continue;
                    const double gap = std::abs(traj.values[k](j) - std::conj(lam));
                    if (p < 0 || gap < best) {
                        p = j;
                        best = gap;
                    }
                }
                if (p < 0 || best > 1e-12 * std::max(1.0, std::abs(lam)))
                    throw Error("cannot repair group " + std::to_string(g) + " at grid point " + std::to_string(k) +
                                    ": complex eigenvalue without conjugate in the group",
                                "smoothing");
                const CVec v = traj.vectors[k].col(i);
                traj.vectors[k].col(i) = (v.real() / v.real().norm()).cast<cplx>();
                traj.vectors[k].col(p) = (v.imag() / v.imag().norm()).cast<cplx>();
                traj.values[k](i) = lam.real();
                traj.values[k](p) = lam.real();
                touched = true;
            }
            if (!touched) continue;
            if (rec.averaged)
                for (int i : grp.members) traj.values[k](i) = mean.real();
            const double pert = relative_perturbation(model.points[k].A, traj.values[k], traj.vectors[k]);
            rec.points.push_back(k);
            rec.max_relative_perturbation = std::max(rec.max_relative_perturbation, pert);
        }
        if (rec.max_relative_perturbation > budget) {
            std::ostringstream msg;
            msg << "complex/real repair of group " << g << " changes A by " << rec.max_relative_perturbation
                << " relative, above the budget " << budget << "; the model violates the diagonalizability assumption";
            throw Error(msg.str(), "smoothing");
        }
        for (int i : grp.members) traj.partner[static_cast<std::size_t>(i)] = -1;
        grp.kind = GroupKind::real;
        grp.canonical.clear();
        grp.dimension = static_cast<int>(grp.members.size());
        log.push_back(std::move(rec));
    }
    return log;
}

std::vector<BlockSequence> group_sequences(const ModeTrajectorySet& traj, const std::vector<MultiplicityGroup>& groups)
{
    const std::size_t nk = traj.grid_size();
    const Eigen::Index n = traj.size();
    std::vector<BlockSequence> out(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& grp = groups[g];
        const std::vector<int>& cols = grp.kind == GroupKind::complex ? grp.canonical : grp.members;
        out[g].resize(nk);
        for (std::size_t k = 0; k < nk; ++k) {
            CMat b(n, static_cast<Eigen::Index>(cols.size()));
            for (std::size_t c = 0; c < cols.size(); ++c) b.col(static_cast<Eigen::Index>(c)) = traj.vectors[k].col(cols[c]);
            if (grp.kind != GroupKind::complex && has_imaginary_part(b)) b = real_basis(b).cast<cplx>();
            out[g][k] = std::move(b);
        }
    }
    return out;
}

std::vector<BlockSequence> smooth_sequences(const std::vector<BlockSequence>& raw, std::size_t start,
                                            SmoothingReport& report, Exec exec)
{
    const std::size_t ng = raw.size();
    std::vector<BlockSequence> out(ng);
    report.start_point = start;
    report.residuals.assign(ng, {});
    report.residuals_before.assign(ng, {});
    std::vector<std::string> drift(ng);
    for_each_index(exec, static_cast<std::ptrdiff_t>(ng), [&](std::ptrdiff_t gi) {
        const auto g = static_cast<std::size_t>(gi);
        const BlockSequence& v = raw[g];
        const std::size_t nk = v.size();
        BlockSequence s(nk);
        s[start] = v[start];
        try {
            for (std::size_t k = start + 1; k < nk; ++k) s[k] = v[k] * procrustes_step(s[k - 1], v[k]);
            for (std::size_t k = start; k-- > 0;) s[k] = v[k] * procrustes_step(s[k + 1], v[k]);
        } catch (const Error& e) {
            throw Error("group " + std::to_string(g) + ": " + e.what(), "smoothing");
        }
        auto& res = report.residuals[g];
        auto& res0 = report.residuals_before[g];
        for (std::size_t k = 0; k + 1 < nk; ++k) {
            res.push_back((s[k] - s[k + 1]).norm());
            res0.push_back((v[k] - v[k + 1]).norm());
        }
        double lo = 1.0, hi = 1.0;
        for (const auto& b : s)
            for (Eigen::Index c = 0; c < b.cols(); ++c) {
                lo = std::min(lo, b.col(c).norm());
                hi = std::max(hi, b.col(c).norm());
            }
        if (lo < 0.1 || hi > 10.0) {
            std::ostringstream msg;
            msg << "group " << g << ": smoothed eigenvector column norms range over [" << lo << ", " << hi << "]";
            drift[g] = msg.str();
        }
        out[g] = std::move(s);
    });
    for (auto& d : drift)
        if (!d.empty()) report.warnings.push_back(std::move(d));
    return out;
}

} // namespace lpvmor
