#pragma once

#include <vector>

#include "lpvmor/common.hpp"

namespace lpvmor {

/// Natural cubic spline through matrix-valued knot data, applied entrywise.
class CubicSpline {
public:
    CubicSpline() = default;
    /// Throws Error for fewer than 2 knots, non-increasing knots or inconsistent shapes.
    CubicSpline(std::vector<double> knots, std::vector<Mat> values);

    Mat evaluate(double rho) const;
    Mat derivative(double rho) const;

    const std::vector<double>& knots() const { return knots_; }
    const std::vector<Mat>& values() const { return values_; }

private:
    std::size_t interval(double rho) const;

    std::vector<double> knots_;
    std::vector<Mat> values_;
    std::vector<Mat> second_; // second derivatives at knots
};

/// Convenience: spline through a sequence of matrices and its derivative at every knot.
std::vector<Mat> spline_knot_derivatives(const std::vector<double>& knots, const std::vector<Mat>& values);

} // namespace lpvmor
