#include "lpvmor/linalg.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace lpvmor {

void normalize_phase(Eigen::Ref<CVec> v)
{
    const double nrm = v.norm();
    if (nrm == 0.0) return;
    v /= nrm;
    Eigen::Index imax = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double a = std::abs(v(i));
        if (a > best * (1.0 + 1e-12)) {
            best = a;
            imax = i;
        }
    }
    const cplx p = v(imax);
    v *= std::conj(p) / std::abs(p);
    v(imax) = cplx(std::abs(v(imax)), 0.0);
}

double condition_number(const CMat& m)
{
    if (m.size() == 0) return 1.0;
    Eigen::BDCSVD<CMat> svd(m);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    if (smin == 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / smin;
}

double condition_number(const Mat& m)
{
    if (m.size() == 0) return 1.0;
    Eigen::BDCSVD<Mat> svd(m);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    if (smin == 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / smin;
}

EigenDecomposition eig_decompose(const Mat& a, double cond_max)
{
    if (a.rows() != a.cols()) throw Error("eig_decompose: matrix is not square");
    const Eigen::Index n = a.rows();
    EigenDecomposition out;
    if (n == 0) {
        out.values.resize(0);
        out.vectors.resize(0, 0);
        return out;
    }
    Eigen::EigenSolver<Mat> es(a, true);
    if (es.info() != Eigen::Success) throw Error("eig_decompose: eigenvalue iteration did not converge");
    out.values = es.eigenvalues();
    out.vectors = es.eigenvectors();

    for (Eigen::Index i = 0; i < n; ++i) {
        const cplx lam = out.values(i);
        if (lam.imag() != 0.0 && i + 1 < n && out.values(i + 1) == std::conj(lam)) {
            // Eigen orders each conjugate pair with the positive imaginary part first.
            if (lam.imag() < 0.0) {
                std::swap(out.values(i), out.values(i + 1));
                out.vectors.col(i).swap(out.vectors.col(i + 1));
            }
            normalize_phase(out.vectors.col(i));
            out.vectors.col(i + 1) = out.vectors.col(i).conjugate();
            out.values(i + 1) = std::conj(out.values(i));
            ++i;
        } else {
            if (lam.imag() == 0.0) out.vectors.col(i) = out.vectors.col(i).real().cast<cplx>();
            normalize_phase(out.vectors.col(i));
        }
    }

    out.condition = condition_number(out.vectors);
    if (!(out.condition <= cond_max)) {
        const Eigen::JacobiSVD<CMat> svd(out.vectors, Eigen::ComputeFullV);
        // The right singular vector of the smallest singular value shows which
        // eigenvectors are nearly dependent.
        const CVec w = svd.matrixV().col(n - 1);
        std::ostringstream msg;
        msg << "near-defective matrix: eigenvector condition number " << out.condition << " exceeds " << cond_max
            << "; nearly dependent eigenvectors for eigenvalues";
        const double wmax = w.cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < n; ++i)
            if (std::abs(w(i)) > 0.1 * wmax) msg << " (" << out.values(i).real() << "," << out.values(i).imag() << ")";
        throw Error(msg.str());
    }
    return out;
}

Mat solve_lyapunov(const Mat& a, const Mat& q)
{
    const Eigen::Index n = a.rows();
    if (a.cols() != n || q.rows() != n || q.cols() != n) throw Error("solve_lyapunov: dimension mismatch");
    if (n == 0) return Mat(0, 0);

    Eigen::ComplexSchur<CMat> schur(a.cast<cplx>());
    if (schur.info() != Eigen::Success) throw Error("solve_lyapunov: Schur decomposition failed");
    const CMat& t = schur.matrixT();
    const CMat& u = schur.matrixU();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(t(i, i).real() < 0.0)) {
            std::ostringstream msg;
            msg << "solve_lyapunov: A is not Hurwitz, eigenvalue (" << t(i, i).real() << "," << t(i, i).imag() << ")";
            throw Error(msg.str());
        }
    }

    // With A = U T U^H the equation becomes T^H Y + Y T = -U^H Q U, solved column by column:
    // (T^H + t_jj I) y_j = -q_j - sum_{i<j} t_ij y_i, a lower-triangular system.
    const CMat rhs = -(u.adjoint() * q.cast<cplx>() * u);
    const CMat th = t.adjoint();
    CMat y(n, n);
    CMat lower(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        CVec b = rhs.col(j);
        if (j > 0) b.noalias() -= y.leftCols(j) * t.col(j).head(j);
        lower = th;
        lower.diagonal().array() += t(j, j);
        y.col(j) = lower.triangularView<Eigen::Lower>().solve(b);
    }
    const Mat x = (u * y * u.adjoint()).real();
    return symmetrize(x);
}

double lyapunov_residual(const Mat& a, const Mat& x, const Mat& q)
{
    const Mat r = a.transpose() * x + x * a + q;
    const double scale = 2.0 * a.norm() * x.norm() + q.norm();
    return scale > 0.0 ? r.norm() / scale : r.norm();
}

LstsqResult complex_lstsq(const CMat& m, const CMat& r)
{
    if (m.rows() != r.rows()) throw Error("complex_lstsq: row count mismatch");
    LstsqResult out;
    Eigen::CompleteOrthogonalDecomposition<CMat> cod(m);
    out.rank = cod.rank();
    out.rank_deficient = out.rank < m.cols();
    out.x = cod.solve(r);
    return out;
}

} // namespace lpvmor
