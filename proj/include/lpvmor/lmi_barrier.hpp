#pragma once

#include <memory>
#include <vector>

#include "lpvmor/common.hpp"

namespace lpvmor {

/// Affine symmetric matrix function F(x) = F_0 + sum_i x_i F_i constrained to F(x) > 0.
class LmiBlock {
public:
    virtual ~LmiBlock() = default;
    virtual Eigen::Index dim() const = 0;
    virtual Mat value(const Vec& x) const = 0;
    /// Column i of `k` receives vec(W F_i W^T), for i = 0 .. x.size()-1.
    virtual void congruences(const Mat& w, Mat& k) const = 0;
};

/// Block given by explicit coefficient matrices.
class DenseLmiBlock : public LmiBlock {
public:
    DenseLmiBlock(Mat f0, std::vector<Mat> fi) : f0_(std::move(f0)), fi_(std::move(fi)) {}
    Eigen::Index dim() const override { return f0_.rows(); }
    Mat value(const Vec& x) const override;
    void congruences(const Mat& w, Mat& k) const override;

private:
    Mat f0_;
    std::vector<Mat> fi_;
};

struct BarrierOptions {
    double t0 = 0.0;       ///< initial barrier weight; <= 0 picks one from the starting point
    double mu = 20.0;      ///< barrier weight growth factor
    double gap_tol = 1e-8; ///< stop when (sum of block sizes) / t <= gap_tol * max(1, |c^T x|)
    int max_newton = 500;  ///< total Newton steps
};

struct BarrierResult {
    Vec x;
    double objective = 0.0;
    int newton_steps = 0;
    bool converged = false;
};

/// Minimises c^T x subject to F_b(x) > 0 for every block, from a strictly
/// feasible x0, by a log-det barrier method with damped Newton steps.
/// Block contributions are summed in a fixed order, so both execution
/// policies give identical results. Throws Error when x0 is infeasible.
BarrierResult minimize_linear_lmi(const Vec& c, const std::vector<std::unique_ptr<LmiBlock>>& blocks, const Vec& x0,
                                  const BarrierOptions& options = {}, Exec exec = Exec::parallel);

} // namespace lpvmor
