#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include <doctest.h>

#include "lpvmor/model.hpp"

namespace testutil {

using namespace lpvmor;

inline Mat random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c)
{
    std::normal_distribution<double> n(0.0, 1.0);
    Mat m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = n(rng);
    return m;
}

/// Random Hurwitz matrix: shifted so the spectral abscissa is -margin.
inline Mat random_stable(std::mt19937_64& rng, Eigen::Index n, double margin = 0.5)
{
    Mat a = random_matrix(rng, n, n) / std::sqrt(static_cast<double>(n));
    const double alpha = Eigen::EigenSolver<Mat>(a, false).eigenvalues().real().maxCoeff();
    a.diagonal().array() -= alpha + margin;
    return a;
}

inline double rel(const Mat& a, const Mat& b)
{
    const double s = std::max(b.norm(), 1e-300);
    return (a - b).norm() / s;
}

/// Grid model whose matrices are given as functions of rho.
template <class F>
GridLpvModel make_model(const std::vector<double>& grid, double rate_bound, F&& f)
{
    GridLpvModel m;
    m.rho_grid = grid;
    m.rate_bound = rate_bound;
    for (double r : grid) {
        GridPoint p = f(r);
        p.rho = r;
        m.points.push_back(std::move(p));
    }
    m.n_x = static_cast<int>(m.points.front().A.rows());
    m.n_u = static_cast<int>(m.points.front().B.cols());
    m.n_y = static_cast<int>(m.points.front().C.rows());
    return m;
}

inline std::vector<double> linspace(double a, double b, int n)
{
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
    v.back() = b;
    return v;
}

inline std::filesystem::path temp_path(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / "lpvmor_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

} // namespace testutil
