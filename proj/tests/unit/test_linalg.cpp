#include <algorithm>

#include "helpers.hpp"
#include "lpvmor/linalg.hpp"

using namespace lpvmor;
using namespace testutil;

namespace {

std::vector<cplx> sorted(const CVec& v)
{
    std::vector<cplx> out(v.data(), v.data() + v.size());
    std::sort(out.begin(), out.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return out;
}

} // namespace

TEST_CASE("eig of a diagonal matrix")
{
    Mat a = Mat::Zero(2, 2);
    a.diagonal() << -1.0, -2.0;
    const EigenDecomposition e = eig_decompose(a);
    for (Eigen::Index i = 0; i < 2; ++i) {
        const Eigen::Index j = e.values(i).real() == -1.0 ? 0 : 1;
        CHECK(std::abs(e.values(i) - cplx(-1.0 - j, 0.0)) == 0.0);
        CHECK(std::abs(e.vectors(j, i) - cplx(1.0, 0.0)) < 1e-15);
        CHECK(std::abs(e.vectors(1 - j, i)) < 1e-15);
    }
}

TEST_CASE("eig of a rotation generator gives a conjugate pair")
{
    Mat a(2, 2);
    a << 0.0, 1.0, -1.0, 0.0;
    const EigenDecomposition e = eig_decompose(a);
    CHECK(std::abs(e.values(0) - cplx(0, 1)) < 1e-14);
    CHECK(std::abs(e.values(1) - cplx(0, -1)) < 1e-14);
    CHECK((e.vectors.col(1) - e.vectors.col(0).conjugate()).norm() == 0.0);
}

TEST_CASE("eig residual and phase convention on random matrices")
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Mat a = random_matrix(rng, 10, 10);
        const EigenDecomposition e = eig_decompose(a);
        const CMat r = a.cast<cplx>() * e.vectors - e.vectors * e.values.asDiagonal();
        const double an = a.operatorNorm();
        for (Eigen::Index i = 0; i < 10; ++i) {
            CHECK(r.col(i).norm() <= 1e-10 * an);
            CHECK(std::abs(e.vectors.col(i).norm() - 1.0) < 1e-12);
            Eigen::Index imax;
            e.vectors.col(i).cwiseAbs().maxCoeff(&imax);
            CHECK(e.vectors(imax, i).imag() == 0.0);
            CHECK(e.vectors(imax, i).real() > 0.0);
        }
    }
}

TEST_CASE("eigenvalues are similarity invariant")
{
    std::mt19937_64 rng(12);
    const Mat a = random_matrix(rng, 8, 8);
    const Mat t = Mat::Identity(8, 8) + 0.3 * random_matrix(rng, 8, 8);
    const Mat b = t.inverse() * a * t;
    const auto ea = sorted(eig_decompose(a).values), eb = sorted(eig_decompose(b).values);
    for (std::size_t i = 0; i < ea.size(); ++i) CHECK(std::abs(ea[i] - eb[i]) < 1e-8);
}

TEST_CASE("Jordan block is reported as near-defective")
{
    Mat a(2, 2);
    a << -1.0, 1.0, 0.0, -1.0;
    try {
        eig_decompose(a);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("near-defective") != std::string::npos);
    }
    CHECK_THROWS_AS(eig_decompose(Mat::Zero(2, 3)), Error);
}

TEST_CASE("Lyapunov closed forms")
{
    CHECK(std::abs(solve_lyapunov(Mat::Constant(1, 1, -1.0), Mat::Constant(1, 1, 1.0))(0, 0) - 0.5) < 1e-15);
    const Mat x = solve_lyapunov(-Mat::Identity(3, 3), Mat::Identity(3, 3));
    CHECK(rel(x, 0.5 * Mat::Identity(3, 3)) < 1e-15);
}

TEST_CASE("Lyapunov residual on random stable systems")
{
    std::mt19937_64 rng(13);
    const Mat a = random_stable(rng, 20, 0.2);
    const Mat b = random_matrix(rng, 20, 3);
    const Mat q = b * b.transpose();
    const Mat x = solve_lyapunov(a, q);
    CHECK(lyapunov_residual(a, x, q) <= 1e-10);
    CHECK((x - x.transpose()).norm() == 0.0);
    const Mat xi = solve_lyapunov(a, Mat::Identity(20, 20));
    CHECK(Eigen::SelfAdjointEigenSolver<Mat>(xi).eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("Lyapunov rejects non-Hurwitz A")
{
    Mat a = Mat::Zero(2, 2);
    a.diagonal() << -1.0, 0.5;
    try {
        solve_lyapunov(a, Mat::Identity(2, 2));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("0.5") != std::string::npos);
    }
}

TEST_CASE("complex least squares")
{
    std::mt19937_64 rng(14);
    const CMat m = random_matrix(rng, 4, 4).cast<cplx>() + cplx(0, 1) * random_matrix(rng, 4, 4).cast<cplx>();
    const LstsqResult sq = complex_lstsq(m, m);
    CHECK((sq.x - CMat::Identity(4, 4)).norm() < 1e-12);
    CHECK_FALSE(sq.rank_deficient);

    CMat m1(2, 1), r1(2, 1);
    m1 << cplx(1, 0), cplx(0, 1);
    r1 << cplx(0, 1), cplx(-1, 0);
    CHECK(std::abs(complex_lstsq(m1, r1).x(0, 0) - cplx(0, 1)) < 1e-14);

    const CMat mo = random_matrix(rng, 9, 3).cast<cplx>() + cplx(0, 1) * random_matrix(rng, 9, 3).cast<cplx>();
    const CMat ro = random_matrix(rng, 9, 2).cast<cplx>();
    const CMat xo = complex_lstsq(mo, ro).x;
    CHECK((mo.adjoint() * (mo * xo - ro)).norm() <= 1e-10 * ro.norm() * mo.norm());

    CMat def = CMat::Zero(3, 2);
    def.col(0) << 1.0, 2.0, 3.0;
    def.col(1) = 2.0 * def.col(0);
    CHECK(complex_lstsq(def, CMat::Ones(3, 1)).rank_deficient);
}

TEST_CASE("condition number")
{
    Mat d = Mat::Zero(3, 3);
    d.diagonal() << 4.0, 2.0, 0.5;
    CHECK(std::abs(condition_number(d) - 8.0) < 1e-12);
    CHECK(std::isinf(condition_number(Mat(Mat::Zero(2, 2)))));
}
