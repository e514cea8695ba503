#include "lpvmor/lmi_barrier.hpp"

#include <cmath>
#include <limits>

namespace lpvmor {
namespace {

constexpr std::ptrdiff_t chunk_count = 16;

struct Eval {
    double barrier = 0.0; // -sum log det F_b
    bool feasible = true;
};

Eval evaluate(const std::vector<std::unique_ptr<LmiBlock>>& blocks, const Vec& x, Exec exec)
{
    const auto nb = static_cast<std::ptrdiff_t>(blocks.size());
    std::vector<double> part(static_cast<std::size_t>(chunk_count), 0.0);
    std::vector<char> ok(static_cast<std::size_t>(chunk_count), 1);
    for_each_index(exec, chunk_count, [&](std::ptrdiff_t c) {
        for (std::ptrdiff_t b = c; b < nb; b += chunk_count) {
            const Mat f = blocks[static_cast<std::size_t>(b)]->value(x);
            Eigen::LLT<Mat> llt(f);
            if (llt.info() != Eigen::Success) {
                ok[static_cast<std::size_t>(c)] = 0;
                return;
            }
            const auto d = llt.matrixLLT().diagonal();
            for (Eigen::Index i = 0; i < d.size(); ++i) {
                if (!(d(i) > 0.0)) {
                    ok[static_cast<std::size_t>(c)] = 0;
                    return;
                }
                part[static_cast<std::size_t>(c)] -= 2.0 * std::log(d(i));
            }
        }
    });
    Eval e;
    for (std::ptrdiff_t c = 0; c < chunk_count; ++c) {
        e.feasible = e.feasible && ok[static_cast<std::size_t>(c)];
        e.barrier += part[static_cast<std::size_t>(c)];
    }
    return e;
}

// Gradient and Hessian of the barrier term at a feasible x.
void derivatives(const std::vector<std::unique_ptr<LmiBlock>>& blocks, const Vec& x, Vec& g, Mat& h, Exec exec)
{
    const Eigen::Index m = x.size();
    const auto nb = static_cast<std::ptrdiff_t>(blocks.size());
    std::vector<Vec> gs(static_cast<std::size_t>(chunk_count), Vec::Zero(m));
    std::vector<Mat> hs(static_cast<std::size_t>(chunk_count), Mat::Zero(m, m));
    for_each_index(exec, chunk_count, [&](std::ptrdiff_t c) {
        Vec& gc = gs[static_cast<std::size_t>(c)];
        Mat& hc = hs[static_cast<std::size_t>(c)];
        for (std::ptrdiff_t b = c; b < nb; b += chunk_count) {
            const LmiBlock& blk = *blocks[static_cast<std::size_t>(b)];
            const Eigen::Index n = blk.dim();
            const Mat f = blk.value(x);
            Eigen::LLT<Mat> llt(f);
            const Mat w = llt.matrixL().solve(Mat::Identity(n, n));
            Mat k(n * n, m);
            blk.congruences(w, k);
            for (Eigen::Index i = 0; i < m; ++i) {
                double tr = 0.0;
                for (Eigen::Index j = 0; j < n; ++j) tr += k(j * n + j, i);
                gc(i) -= tr;
            }
            hc.noalias() += k.transpose() * k;
        }
    });
    g = Vec::Zero(m);
    h = Mat::Zero(m, m);
    for (std::ptrdiff_t c = 0; c < chunk_count; ++c) {
        g += gs[static_cast<std::size_t>(c)];
        h += hs[static_cast<std::size_t>(c)];
    }
}

} // namespace

Mat DenseLmiBlock::value(const Vec& x) const
{
    Mat f = f0_;
    for (std::size_t i = 0; i < fi_.size(); ++i) f += x(static_cast<Eigen::Index>(i)) * fi_[i];
    return f;
}

void DenseLmiBlock::congruences(const Mat& w, Mat& k) const
{
    const Eigen::Index n = f0_.rows();
    for (std::size_t i = 0; i < fi_.size(); ++i) {
        const Mat c = w * fi_[i] * w.transpose();
        k.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Vec>(c.data(), n * n);
    }
}

BarrierResult minimize_linear_lmi(const Vec& c, const std::vector<std::unique_ptr<LmiBlock>>& blocks, const Vec& x0,
                                  const BarrierOptions& options, Exec exec)
{
    BarrierResult r;
    r.x = x0;
    Eval e = evaluate(blocks, r.x, exec);
    if (!e.feasible) throw Error("barrier: starting point is not strictly feasible", "gramian");
    double total_dim = 0.0;
    for (const auto& b : blocks) total_dim += static_cast<double>(b->dim());
    double t = options.t0 > 0.0 ? options.t0 : total_dim / std::max(std::abs(c.dot(r.x)), 1e-12);

    Vec g;
    Mat h;
    while (r.newton_steps < options.max_newton) {
        // Centering by damped Newton steps on t c^T x - sum log det F_b(x).
        // Near the end round-off keeps the decrement from vanishing, hence the per-centering cap.
        for (int step = 0; step < 50 && r.newton_steps < options.max_newton; ++step) {
            derivatives(blocks, r.x, g, h, exec);
            g += t * c;
            Eigen::LDLT<Mat> ldlt(h);
            Vec d = ldlt.solve(-g);
            if (!d.allFinite()) break;
            const double dec = -g.dot(d);
            ++r.newton_steps;
            if (!(dec > 1e-8)) break;
            const double phi0 = t * c.dot(r.x) + e.barrier;
            double alpha = 1.0;
            bool moved = false;
            while (alpha > 1e-14) {
                const Vec xn = r.x + alpha * d;
                const Eval en = evaluate(blocks, xn, exec);
                if (en.feasible && t * c.dot(xn) + en.barrier <= phi0 - 0.25 * alpha * dec) {
                    r.x = xn;
                    e = en;
                    moved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!moved) break;
        }
        if (total_dim / t <= options.gap_tol * std::max(1.0, std::abs(c.dot(r.x)))) {
            r.converged = true;
            break;
        }
        t *= options.mu;
    }
    r.objective = c.dot(r.x);
    return r;
}

} // namespace lpvmor
