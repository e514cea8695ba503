#pragma once

#include "lpvmor/common.hpp"

namespace lpvmor {

/// Eigen-decomposition A V = V diag(values) with unit-norm columns.
///
/// Conjugate eigenvalues are stored next to each other (positive imaginary part
/// first) with exactly conjugate eigenvectors. Each eigenvector is scaled so
/// that its largest-magnitude entry (first one on ties) is real and positive.
struct EigenDecomposition {
    CVec values;
    CMat vectors;
    double condition = 1.0; ///< 2-norm condition number of `vectors`
};

inline constexpr double default_cond_max = 1e12;

/// Throws Error ("near-defective matrix ...") when cond(V) > cond_max.
EigenDecomposition eig_decompose(const Mat& a, double cond_max = default_cond_max);

/// Scale v to unit norm and rotate its largest-magnitude entry onto the positive real axis.
void normalize_phase(Eigen::Ref<CVec> v);

/// Solves A^T X + X A + Q = 0 for stable A by complex Schur back-substitution.
/// Throws Error naming the eigenvalue when A is not Hurwitz.
Mat solve_lyapunov(const Mat& a, const Mat& q);

/// ||A^T X + X A + Q||_F / (2 ||A||_F ||X||_F + ||Q||_F)
double lyapunov_residual(const Mat& a, const Mat& x, const Mat& q);

struct LstsqResult {
    CMat x;
    Eigen::Index rank = 0;
    bool rank_deficient = false;
};

/// Minimum-norm minimiser of ||M X - R||_F. Rank deficiency is reported, not thrown.
LstsqResult complex_lstsq(const CMat& m, const CMat& r);

/// 2-norm condition number via singular values (infinity when singular).
double condition_number(const CMat& m);
double condition_number(const Mat& m);

/// Symmetric part (X + X^T)/2.
inline Mat symmetrize(const Mat& x) { return 0.5 * (x + x.transpose()); }

} // namespace lpvmor
