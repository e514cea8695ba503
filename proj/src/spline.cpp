#include "lpvmor/spline.hpp"

#include <algorithm>
#include <string>

namespace lpvmor {

CubicSpline::CubicSpline(std::vector<double> knots, std::vector<Mat> values)
    : knots_(std::move(knots)), values_(std::move(values))
{
    const std::size_t n = knots_.size();
    if (n < 2) throw Error("spline_fit: at least 2 knots required");
    if (values_.size() != n) throw Error("spline_fit: one value per knot required");
    for (std::size_t k = 1; k < n; ++k)
        if (!(knots_[k] > knots_[k - 1])) throw Error("spline_fit: knots must be strictly increasing");
    const Eigen::Index rows = values_[0].rows();
    const Eigen::Index cols = values_[0].cols();
    for (const auto& v : values_)
        if (v.rows() != rows || v.cols() != cols) throw Error("spline_fit: inconsistent value shapes");

    // Thomas algorithm for the natural-spline tridiagonal system; the scalar
    // coefficients are shared by all entries so the matrices are eliminated together.
    second_.assign(n, Mat::Zero(rows, cols));
    if (n == 2) return;
    const std::size_t m = n - 2;
    std::vector<double> diag(m), upper(m);
    std::vector<Mat> rhs(m);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h0 = knots_[i] - knots_[i - 1];
        const double h1 = knots_[i + 1] - knots_[i];
        diag[i - 1] = 2.0 * (h0 + h1);
        upper[i - 1] = h1;
        rhs[i - 1] = 6.0 * ((values_[i + 1] - values_[i]) / h1 - (values_[i] - values_[i - 1]) / h0);
    }
    for (std::size_t i = 1; i < m; ++i) {
        const double sub = knots_[i + 1] - knots_[i];
        const double w = sub / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    second_[m] = rhs[m - 1] / diag[m - 1];
    for (std::size_t i = m - 1; i-- > 0;) second_[i + 1] = (rhs[i] - upper[i] * second_[i + 2]) / diag[i];
}

std::size_t CubicSpline::interval(double rho) const
{
    const double span = knots_.back() - knots_.front();
    const double tol = 1e-12 * span;
    if (rho < knots_.front() - tol || rho > knots_.back() + tol)
        throw Error("spline: rho = " + std::to_string(rho) + " outside knot range");
    auto it = std::upper_bound(knots_.begin(), knots_.end(), rho);
    std::size_t k = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
    return std::min(k, knots_.size() - 2);
}

Mat CubicSpline::evaluate(double rho) const
{
    const std::size_t k = interval(rho);
    if (rho == knots_[k]) return values_[k];
    if (rho == knots_[k + 1]) return values_[k + 1];
    const double h = knots_[k + 1] - knots_[k];
    const double a = knots_[k + 1] - rho;
    const double b = rho - knots_[k];
    return second_[k] * (a * a * a / (6.0 * h)) + second_[k + 1] * (b * b * b / (6.0 * h)) +
           (values_[k] / h - second_[k] * (h / 6.0)) * a + (values_[k + 1] / h - second_[k + 1] * (h / 6.0)) * b;
}

Mat CubicSpline::derivative(double rho) const
{
    const std::size_t k = interval(rho);
    const double h = knots_[k + 1] - knots_[k];
    const double a = knots_[k + 1] - rho;
    const double b = rho - knots_[k];
    return second_[k] * (-a * a / (2.0 * h)) + second_[k + 1] * (b * b / (2.0 * h)) + (values_[k + 1] - values_[k]) / h -
           (second_[k + 1] - second_[k]) * (h / 6.0);
}

std::vector<Mat> spline_knot_derivatives(const std::vector<double>& knots, const std::vector<Mat>& values)
{
    CubicSpline s(knots, values);
    std::vector<Mat> out;
    out.reserve(knots.size());
    for (double r : knots) out.push_back(s.derivative(r));
    return out;
}

} // namespace lpvmor
