#include "lpvmor/gramian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "lpvmor/linalg.hpp"
#include "lpvmor/lmi_barrier.hpp"

namespace lpvmor {
namespace {

// Observability uses F = A_v, Q = C^T C and +nu X1; controllability uses
// F = A_v^T, Q = B B^T and -nu X1. Both read F^T X + X F + Q + sign nu X1.
struct Side {
    const Subsystem* sub;
    bool obs;

    std::size_t nk() const { return sub->rho.size(); }
    Mat f(std::size_t k, int s) const
    {
        Mat a = sub->vertex_A(k, s);
        if (!obs) a.transposeInPlace();
        return a;
    }
    Mat f_frozen(std::size_t k) const { return obs ? sub->A[k] : Mat(sub->A[k].transpose()); }
    Mat q(std::size_t k) const
    {
        return obs ? Mat(sub->C[k].transpose() * sub->C[k]) : Mat(sub->B[k] * sub->B[k].transpose());
    }
    double rate(int s) const { return obs ? sub->nu(s) : -sub->nu(s); }
};

Mat lmi_lhs(const Side& side, std::size_t k, int s, const AffineGramian& x, bool with_q)
{
    const Mat f = side.f(k, s);
    const Mat xk = x.evaluate(side.sub->rho[k]);
    Mat r = side.rate(s) * x.X1 + f.transpose() * xk + xk * f;
    if (with_q) r += side.q(k);
    return symmetrize(r);
}

double max_eig(const Mat& m)
{
    return Eigen::SelfAdjointEigenSolver<Mat>(m, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
}

double min_eig(const Mat& m)
{
    return Eigen::SelfAdjointEigenSolver<Mat>(m, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

// Largest generalized eigenvalue of (M, L L^T), i.e. lambda_max(L^{-1} M L^{-T}).
double gen_max_eig(const Mat& m, const Eigen::LLT<Mat>& llt)
{
    const Mat lm = llt.matrixL().solve(m);
    const Mat w = llt.matrixL().solve(Mat(lm.transpose()));
    return max_eig(symmetrize(w));
}

AffineGramian affine_fit(const std::vector<double>& rho, const std::vector<Mat>& xs)
{
    const std::size_t nk = rho.size();
    AffineGramian g;
    Mat mean = Mat::Zero(xs.front().rows(), xs.front().cols());
    double rbar = 0.0;
    for (std::size_t k = 0; k < nk; ++k) {
        mean += xs[k];
        rbar += rho[k];
    }
    mean /= static_cast<double>(nk);
    rbar /= static_cast<double>(nk);
    g.X1 = Mat::Zero(mean.rows(), mean.cols());
    double srr = 0.0;
    for (std::size_t k = 0; k < nk; ++k) {
        g.X1 += (rho[k] - rbar) * (xs[k] - mean);
        srr += (rho[k] - rbar) * (rho[k] - rbar);
    }
    if (srr > 0.0) g.X1 /= srr;
    else g.X1.setZero();
    g.X0 = mean - rbar * g.X1;
    g.X0 = symmetrize(g.X0);
    g.X1 = symmetrize(g.X1);
    return g;
}

bool certificate_ok(const Side& side, const Mat& p, std::vector<Eigen::LLT<Mat>>* factors)
{
    for (std::size_t k = 0; k < side.nk(); ++k)
        for (int s = 0; s < 2; ++s) {
            const Mat f = side.f(k, s);
            Eigen::LLT<Mat> llt(symmetrize(-(f.transpose() * p + p * f)));
            if (llt.info() != Eigen::Success) return false;
            if (factors) factors->push_back(std::move(llt));
        }
    return true;
}

// Makes X satisfy the vertex inequalities with room `target` (and X(rho_k) >= target I).
AffineGramian make_feasible(const Side& side, AffineGramian x, double target, double& beta, double& gamma)
{
    const std::size_t nk = side.nk();
    const Eigen::Index n = x.dim();
    const Mat shift = target * Mat::Identity(n, n);
    beta = 0.0;
    gamma = 0.0;

    // Inflation (1 + beta) X: needs -K_v > 0 where K_v is the inequality without Q.
    bool inflatable = true;
    double s_max = 0.0;
    for (std::size_t k = 0; k < nk && inflatable; ++k)
        for (int s = 0; s < 2; ++s) {
            Eigen::LLT<Mat> llt(Mat(-lmi_lhs(side, k, s, x, false)));
            if (llt.info() != Eigen::Success) {
                inflatable = false;
                break;
            }
            s_max = std::max(s_max, gen_max_eig(side.q(k) + shift, llt));
        }
    if (inflatable) {
        double b = std::max(0.0, std::ceil((s_max - 1.0) / 0.1 - 1e-9) * 0.1);
        bool pd = true;
        for (std::size_t k = 0; k < nk; ++k) pd = pd && (1.0 + b) * min_eig(x.evaluate(side.sub->rho[k])) > target;
        if (pd && b <= 10.0) {
            beta = b;
            x.X0 *= 1.0 + b;
            x.X1 *= 1.0 + b;
            return x;
        }
    }

    // Shift by a common Lyapunov certificate P: X0 += gamma P. First choice is
    // shaped by the violations themselves, so the shift stays out of directions
    // that already satisfy the inequalities.
    std::vector<Mat> candidates;
    {
        Mat p = Mat::Zero(n, n);
        double vmax = 0.0;
        std::vector<Mat> viol(2 * nk);
        for (std::size_t k = 0; k < nk; ++k)
            for (int s = 0; s < 2; ++s) {
                const Eigen::SelfAdjointEigenSolver<Mat> es(lmi_lhs(side, k, s, x, true) + shift);
                const Vec lam = es.eigenvalues().cwiseMax(0.0);
                viol[2 * k + static_cast<std::size_t>(s)] = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
                vmax = std::max(vmax, lam.maxCoeff());
            }
        Mat vsum = std::max(1e-3 * vmax, target) * Mat::Identity(n, n);
        for (const Mat& v : viol) vsum += v;
        for (std::size_t k = 0; k < nk; ++k)
            for (int s = 0; s < 2; ++s) p += solve_lyapunov(side.f(k, s), vsum);
        p = symmetrize(p / static_cast<double>(2 * nk));
        // Blending in the identity restores the certificate property where the
        // averaged shape alone misses some vertex.
        const double scale = p.trace() / static_cast<double>(n);
        for (double tau : {0.0, 1e-3, 1e-2, 1e-1, 1.0})
            candidates.push_back(p + tau * scale * Mat::Identity(n, n));
    }
    candidates.push_back(Mat::Identity(n, n));
    {
        Mat p = Mat::Zero(n, n);
        for (std::size_t k = 0; k < nk; ++k)
            for (int s = 0; s < 2; ++s) p += solve_lyapunov(side.f(k, s), Mat::Identity(n, n));
        candidates.push_back(symmetrize(p / static_cast<double>(2 * nk)));
    }
    Mat p;
    std::vector<Eigen::LLT<Mat>> factors;
    for (const Mat& c : candidates) {
        factors.clear();
        if (certificate_ok(side, c, &factors)) {
            p = c;
            break;
        }
    }
    if (p.size() == 0)
        throw Error("no common Lyapunov certificate at the rate vertices; the cluster is not verifiably "
                    "quadratically stable at this rate bound",
                    "gramian");
    const Eigen::LLT<Mat> pl(p);
    double g = 0.0;
    for (std::size_t k = 0; k < nk; ++k) {
        for (int s = 0; s < 2; ++s)
            g = std::max(g, gen_max_eig(lmi_lhs(side, k, s, x, true) + shift, factors[2 * k + static_cast<std::size_t>(s)]));
        g = std::max(g, gen_max_eig(shift - x.evaluate(side.sub->rho[k]), pl));
    }
    g *= 1.0 + 1e-9;
    gamma = g;
    x.X0 = symmetrize(x.X0 + g * p);
    return x;
}

void check_hurwitz(const Subsystem& sub)
{
    for (std::size_t k = 0; k < sub.rho.size(); ++k)
        for (int s = 0; s < 2; ++s) {
            const Eigen::VectorXcd ev = Eigen::EigenSolver<Mat>(sub.vertex_A(k, s), false).eigenvalues();
            for (Eigen::Index i = 0; i < ev.size(); ++i)
                if (!(ev(i).real() < 0.0)) {
                    std::ostringstream msg;
                    msg << "frozen state matrix not Hurwitz at grid point " << k << ", rate vertex " << s
                        << " (eigenvalue " << ev(i).real() << "); separate unstable modes before computing Gramians";
                    throw Error(msg.str(), "gramian");
                }
        }
}

// ---- barrier half-step --------------------------------------------------

using Pair = std::pair<Eigen::Index, Eigen::Index>;

std::vector<Pair> vech_pairs(Eigen::Index n)
{
    std::vector<Pair> out;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j) out.emplace_back(i, j);
    return out;
}

Vec vech(const Mat& x, const std::vector<Pair>& pairs)
{
    Vec v(static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t i = 0; i < pairs.size(); ++i) v(static_cast<Eigen::Index>(i)) = x(pairs[i].first, pairs[i].second);
    return v;
}

Mat unvech(const Vec& v, Eigen::Index offset, const std::vector<Pair>& pairs, Eigen::Index n)
{
    Mat x(n, n);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const double e = v(offset + static_cast<Eigen::Index>(i));
        x(pairs[i].first, pairs[i].second) = e;
        x(pairs[i].second, pairs[i].first) = e;
    }
    return x;
}

class GramianBlock : public LmiBlock {
public:
    // Residual block: -(dnu X1 + F^T X + X F + Q) - shift I. PD block: X - shift I.
    GramianBlock(const std::vector<Pair>* pairs, Eigen::Index n, bool has_x1, double rho, bool residual, Mat f,
                 Mat q, double dnu, double shift)
        : pairs_(pairs), n_(n), has_x1_(has_x1), rho_(rho), residual_(residual), f_(std::move(f)), q_(std::move(q)),
          dnu_(dnu), shift_(shift)
    {}

    Eigen::Index dim() const override { return n_; }

    Mat value(const Vec& v) const override
    {
        const Mat x0 = unvech(v, 0, *pairs_, n_);
        const Mat x1 = has_x1_ ? unvech(v, static_cast<Eigen::Index>(pairs_->size()), *pairs_, n_) : Mat::Zero(n_, n_);
        const Mat x = x0 + rho_ * x1;
        Mat out;
        if (residual_) out = -(dnu_ * x1 + f_.transpose() * x + x * f_ + q_);
        else out = x;
        out.diagonal().array() -= shift_;
        return symmetrize(out);
    }

    void congruences(const Mat& w, Mat& k) const override
    {
        const auto m = static_cast<Eigen::Index>(pairs_->size());
        const Mat u = residual_ ? Mat(w * f_.transpose()) : Mat();
        Mat t(n_, n_), s(n_, n_);
        for (Eigen::Index i = 0; i < m; ++i) {
            const auto [p, q] = (*pairs_)[static_cast<std::size_t>(i)];
            if (p == q) s.noalias() = w.col(p) * w.col(p).transpose();
            else s.noalias() = w.col(p) * w.col(q).transpose() + w.col(q) * w.col(p).transpose();
            if (residual_) {
                if (p == q) t.noalias() = u.col(p) * w.col(p).transpose();
                else t.noalias() = u.col(p) * w.col(q).transpose() + u.col(q) * w.col(p).transpose();
                t += t.transpose().eval();
                k.col(i) = -Eigen::Map<const Vec>(t.data(), n_ * n_);
                if (has_x1_) {
                    const Mat c1 = -(dnu_ * s + rho_ * t);
                    k.col(m + i) = Eigen::Map<const Vec>(c1.data(), n_ * n_);
                }
            } else {
                k.col(i) = Eigen::Map<const Vec>(s.data(), n_ * n_);
                if (has_x1_) k.col(m + i) = rho_ * Eigen::Map<const Vec>(s.data(), n_ * n_);
            }
        }
    }

private:
    const std::vector<Pair>* pairs_;
    Eigen::Index n_;
    bool has_x1_;
    double rho_;
    bool residual_;
    Mat f_, q_;
    double dnu_;
    double shift_;
};

// Minimises sum_k trace(X(rho_k) Y(rho_k)) over X on `side` with Y fixed.
AffineGramian half_step(const Side& side, const AffineGramian& x, const AffineGramian& y, double margin, Exec exec)
{
    const Subsystem& sub = *side.sub;
    const std::size_t nk = side.nk();
    const Eigen::Index n = x.dim();
    const bool has_x1 = nk > 1;
    const std::vector<Pair> pairs = vech_pairs(n);
    const auto m = static_cast<Eigen::Index>(pairs.size());

    std::vector<std::unique_ptr<LmiBlock>> blocks;
    for (std::size_t k = 0; k < nk; ++k) {
        for (int s = 0; s < 2; ++s)
            blocks.push_back(std::make_unique<GramianBlock>(&pairs, n, has_x1, sub.rho[k], true, side.f(k, s),
                                                            side.q(k), side.rate(s), 2.0 * margin));
        blocks.push_back(std::make_unique<GramianBlock>(&pairs, n, has_x1, sub.rho[k], false, Mat(), Mat(), 0.0, margin));
    }

    Mat s0 = Mat::Zero(n, n), s1 = Mat::Zero(n, n);
    for (std::size_t k = 0; k < nk; ++k) {
        const Mat yk = y.evaluate(sub.rho[k]);
        s0 += yk;
        s1 += sub.rho[k] * yk;
    }
    Vec c(has_x1 ? 2 * m : m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto [p, q] = pairs[static_cast<std::size_t>(i)];
        const double f = p == q ? 1.0 : 2.0;
        c(i) = f * s0(p, q);
        if (has_x1) c(m + i) = f * s1(p, q);
    }
    Vec x0(c.size());
    x0.head(m) = vech(x.X0, pairs);
    if (has_x1) x0.tail(m) = vech(x.X1, pairs);

    const BarrierResult r = minimize_linear_lmi(c, blocks, x0, BarrierOptions{}, exec);
    AffineGramian out;
    out.X0 = unvech(r.x, 0, pairs, n);
    out.X1 = has_x1 ? unvech(r.x, m, pairs, n) : Mat::Zero(n, n);
    return out;
}

} // namespace

double LmiReport::worst() const
{
    double w = -std::numeric_limits<double>::infinity();
    for (double v : obs_max) w = std::max(w, v);
    for (double v : ctrl_max) w = std::max(w, v);
    return w;
}

double lmi_margin(const Subsystem& sub, double factor)
{
    double a = 0.0;
    for (const auto& m : sub.A) a = std::max(a, spectral_norm(m));
    return factor * a;
}

GramianPair init_pointwise(const Subsystem& sub, Exec exec, double margin_factor)
{
    if (sub.rho.empty() || sub.n_x() == 0) throw Error("init_pointwise: empty subsystem", "gramian");
    check_hurwitz(sub);
    const std::size_t nk = sub.rho.size();
    const double margin = lmi_margin(sub, margin_factor);
    GramianPair out;
    for (int side_i = 0; side_i < 2; ++side_i) {
        const Side side{&sub, side_i == 0};
        std::vector<Mat> xs(nk);
        for_each_index(exec, static_cast<std::ptrdiff_t>(nk), [&](std::ptrdiff_t ki) {
            const auto k = static_cast<std::size_t>(ki);
            xs[k] = symmetrize(solve_lyapunov(side.f_frozen(k), side.q(k)));
        });
        // round-off floor, so a zero margin still verifies
        double floor = 0.0;
        for (std::size_t k = 0; k < nk; ++k)
            floor = std::max(floor, 1e-13 * (2.0 * side.f_frozen(k).norm() * xs[k].norm() + side.q(k).norm()));
        double beta = 0.0, gamma = 0.0;
        const AffineGramian g =
            make_feasible(side, affine_fit(sub.rho, xs), std::max(3.0 * margin, floor), beta, gamma);
        if (side.obs) {
            out.Xo = g;
            out.beta_o = beta;
            out.gamma_o = gamma;
        } else {
            out.Xc = g;
            out.beta_c = beta;
            out.gamma_c = gamma;
        }
    }
    return out;
}

LmiReport verify_lmi(const Subsystem& sub, const AffineGramian& xo, const AffineGramian& xc, double margin)
{
    const std::size_t nk = sub.rho.size();
    LmiReport r;
    r.margin = margin;
    r.feasible = true;
    const Side so{&sub, true}, sc{&sub, false};
    for (std::size_t k = 0; k < nk; ++k) {
        for (int s = 0; s < 2; ++s) {
            r.obs_max.push_back(max_eig(lmi_lhs(so, k, s, xo, true)));
            r.ctrl_max.push_back(max_eig(lmi_lhs(sc, k, s, xc, true)));
            r.feasible = r.feasible && r.obs_max.back() <= -margin && r.ctrl_max.back() <= -margin;
        }
        r.obs_min_eig.push_back(min_eig(symmetrize(xo.evaluate(sub.rho[k]))));
        r.ctrl_min_eig.push_back(min_eig(symmetrize(xc.evaluate(sub.rho[k]))));
        r.feasible = r.feasible && r.obs_min_eig.back() > 0.0 && r.ctrl_min_eig.back() > 0.0;
    }
    return r;
}

double gramian_trace(const Subsystem& sub, const AffineGramian& xo, const AffineGramian& xc)
{
    double t = 0.0;
    for (double rho : sub.rho) t += xo.evaluate(rho).cwiseProduct(xc.evaluate(rho)).sum();
    return t;
}

RefineResult refine_alternating(const Subsystem& sub, const GramianPair& init, const RefineConfig& config, Exec exec)
{
    const double margin = lmi_margin(sub, config.margin_factor);
    RefineResult r;
    r.Xo = init.Xo;
    r.Xc = init.Xc;
    double trace = gramian_trace(sub, r.Xo, r.Xc);
    r.trace_history.push_back(trace);
    bool stop = false;
    for (int it = 1; it <= config.max_iters && !stop; ++it) {
        const double before = trace;
        for (int side_i = 0; side_i < 2 && !stop; ++side_i) {
            const Side side{&sub, side_i == 0};
            try {
                AffineGramian cand = half_step(side, side.obs ? r.Xo : r.Xc, side.obs ? r.Xc : r.Xo, margin, exec);
                const AffineGramian& xo = side.obs ? cand : r.Xo;
                const AffineGramian& xc = side.obs ? r.Xc : cand;
                const double t = gramian_trace(sub, xo, xc);
                if (t < trace && verify_lmi(sub, xo, xc, margin).feasible) {
                    (side.obs ? r.Xo : r.Xc) = std::move(cand);
                    trace = t;
                }
            } catch (const Error& e) {
                r.warnings.push_back(std::string("refinement stopped: ") + e.what());
                stop = true;
            }
            r.trace_history.push_back(trace);
        }
        r.iterations = it;
        if (before - trace < config.rel_tol * std::abs(before)) break;
    }
    r.report = verify_lmi(sub, r.Xo, r.Xc, margin);
    return r;
}

} // namespace lpvmor
