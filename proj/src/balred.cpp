#include "lpvmor/balred.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lpvmor/assignment.hpp"
#include "lpvmor/linalg.hpp"
#include "lpvmor/spline.hpp"

namespace lpvmor {

std::vector<double> BalancingFactors::profile() const
{
    std::vector<double> p;
    if (S.empty()) return p;
    p.assign(static_cast<std::size_t>(S.front().size()), 0.0);
    for (const auto& s : S)
        for (Eigen::Index j = 0; j < s.size(); ++j) p[static_cast<std::size_t>(j)] = std::max(p[static_cast<std::size_t>(j)], s(j));
    return p;
}

BalancingFactors factorize(const AffineGramian& xo, const AffineGramian& xc, const std::vector<double>& rho, Exec exec)
{
    const std::size_t nk = rho.size();
    BalancingFactors f;
    f.rho = rho;
    f.Ro.resize(nk);
    f.Rc.resize(nk);
    for_each_index(exec, static_cast<std::ptrdiff_t>(nk), [&](std::ptrdiff_t ki) {
        const auto k = static_cast<std::size_t>(ki);
        const Eigen::LLT<Mat> lo(symmetrize(xo.evaluate(rho[k])));
        const Eigen::LLT<Mat> lc(symmetrize(xc.evaluate(rho[k])));
        if (lo.info() != Eigen::Success || lc.info() != Eigen::Success)
            throw Error("Gramian not positive definite at grid point " + std::to_string(k), "balred");
        f.Ro[k] = lo.matrixU();
        f.Rc[k] = lc.matrixL();
    });
    return f;
}

AlignedSvd smooth_svd(const std::vector<Mat>& products, Exec exec)
{
    const std::size_t nk = products.size();
    AlignedSvd out;
    out.U.resize(nk);
    out.V.resize(nk);
    out.S.resize(nk);
    for_each_index(exec, static_cast<std::ptrdiff_t>(nk), [&](std::ptrdiff_t ki) {
        const auto k = static_cast<std::size_t>(ki);
        const Eigen::JacobiSVD<Mat> svd(products[k], Eigen::ComputeFullU | Eigen::ComputeFullV);
        out.U[k] = svd.matrixU();
        out.V[k] = svd.matrixV();
        out.S[k] = svd.singularValues();
    });
    bool warned = false;
    for (std::size_t k = 0; k < nk; ++k) {
        const Vec& s = out.S[k];
        for (Eigen::Index j = 0; j + 1 < s.size() && !warned; ++j)
            if (s(j) - s(j + 1) < 1e-12 * std::max(s(0), 1e-300)) {
                std::ostringstream msg;
                msg << "singular values " << j << " and " << j + 1 << " nearly equal at grid point " << k
                    << "; alignment is arbitrary there";
                out.warnings.push_back(msg.str());
                warned = true;
            }
        if (k == 0) continue;
        const Eigen::Index n = s.size();
        const Mat overlap = out.U[k - 1].transpose() * out.U[k];
        const Assignment a = solve_assignment(-overlap.cwiseAbs());
        Mat u(n, n), v(n, n);
        Vec sv(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int j = a.col_of_row[static_cast<std::size_t>(i)];
            const double sign = overlap(i, j) < 0.0 ? -1.0 : 1.0;
            u.col(i) = sign * out.U[k].col(j);
            v.col(i) = sign * out.V[k].col(j);
            sv(i) = s(j);
        }
        out.U[k] = std::move(u);
        out.V[k] = std::move(v);
        out.S[k] = std::move(sv);
    }
    return out;
}

void align_factors(BalancingFactors& f, Exec exec)
{
    const std::size_t nk = f.rho.size();
    std::vector<Mat> prod(nk);
    for (std::size_t k = 0; k < nk; ++k) prod[k] = f.Ro[k] * f.Rc[k];
    AlignedSvd a = smooth_svd(prod, exec);
    f.U = std::move(a.U);
    f.V = std::move(a.V);
    f.S = std::move(a.S);
    f.warnings.insert(f.warnings.end(), a.warnings.begin(), a.warnings.end());

    const std::vector<double> p = f.profile();
    std::vector<Eigen::Index> order(p.size());
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a1, Eigen::Index b1) { return p[static_cast<std::size_t>(a1)] > p[static_cast<std::size_t>(b1)]; });
    for (std::size_t k = 0; k < nk; ++k) {
        Mat u = f.U[k], v = f.V[k];
        Vec s = f.S[k];
        for (std::size_t i = 0; i < order.size(); ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            u.col(ii) = f.U[k].col(order[i]);
            v.col(ii) = f.V[k].col(order[i]);
            s(ii) = f.S[k](order[i]);
        }
        f.U[k] = std::move(u);
        f.V[k] = std::move(v);
        f.S[k] = std::move(s);
    }
}

OrderSelection select_order(const std::vector<double>& profile, double eta, int explicit_order, bool residualize)
{
    OrderSelection o;
    o.dimension = static_cast<int>(profile.size());
    o.profile = profile;
    o.residualize = residualize;
    if (o.dimension <= 2) {
        o.kept = o.dimension;
        o.rule = "exempt";
    } else if (explicit_order >= 0) {
        o.kept = std::min(explicit_order, o.dimension);
        o.rule = "explicit";
    } else {
        const double top = *std::max_element(profile.begin(), profile.end());
        o.kept = static_cast<int>(std::count_if(profile.begin(), profile.end(), [&](double p) { return p > eta * top; }));
        o.rule = "threshold";
    }
    return o;
}

ReducedSubsystem balance_and_truncate(const Subsystem& sub, const BalancingFactors& factors,
                                      const OrderSelection& selection, const AffineGramian& xo,
                                      const AffineGramian& xc, Exec exec)
{
    const std::size_t nk = sub.rho.size();
    const Eigen::Index n = sub.n_x();
    const Eigen::Index r = selection.kept;
    ReducedSubsystem out;
    out.rho = sub.rho;
    out.rate_bound = sub.rate_bound;
    out.kept = selection.kept;

    for (std::size_t k = 0; k < nk && r > 0; ++k)
        if (factors.S[k](r - 1) < 1e-12 * factors.S[k](0)) {
            std::ostringstream msg;
            msg << "singular value " << r - 1 << " is numerically zero at grid point " << k
                << "; choose a smaller kept order";
            throw Error(msg.str(), "balred");
        }
    bool residualize = selection.residualize && r < n;
    if (residualize)
        for (std::size_t k = 0; k < nk; ++k)
            if (factors.S[k](n - 1) < 1e-12 * factors.S[k](0)) {
                out.warnings.push_back("residualization needs all singular values nonzero; truncating instead");
                residualize = false;
                break;
            }
    const Eigen::Index m = residualize ? n : r;

    std::vector<Mat> t(nk), l(nk), dt(nk);
    std::vector<double> err(nk, 0.0);
    for_each_index(exec, static_cast<std::ptrdiff_t>(nk), [&](std::ptrdiff_t ki) {
        const auto k = static_cast<std::size_t>(ki);
        const Vec is = factors.S[k].head(m).cwiseSqrt().cwiseInverse();
        t[k] = factors.Rc[k] * factors.V[k].leftCols(m) * is.asDiagonal();
        l[k] = is.asDiagonal() * factors.U[k].leftCols(m).transpose() * factors.Ro[k];
        const Mat s = factors.S[k].head(m).asDiagonal();
        const double ns = std::max(s.norm(), 1e-300);
        const double eo = (t[k].transpose() * xo.evaluate(sub.rho[k]) * t[k] - s).norm() / ns;
        const double ec = (l[k] * xc.evaluate(sub.rho[k]) * l[k].transpose() - s).norm() / ns;
        err[k] = std::max(eo, ec);
    });
    if (nk >= 2 && m > 0) dt = spline_knot_derivatives(sub.rho, t);
    else
        for (auto& d : dt) d = Mat::Zero(n, m);
    out.balancing_error = *std::max_element(err.begin(), err.end());

    std::vector<Mat> av(2 * nk), b(nk), c(nk);
    for (std::size_t k = 0; k < nk; ++k) {
        for (int s = 0; s < 2; ++s) {
            const double nu = sub.nu(s);
            av[2 * k + static_cast<std::size_t>(s)] = l[k] * sub.vertex_A(k, s) * t[k] - nu * (l[k] * dt[k]);
        }
        b[k] = l[k] * sub.B[k];
        c[k] = sub.C[k] * t[k];
    }

    if (residualize) {
        bool ok = true;
        for (std::size_t k = 0; k < nk && ok; ++k)
            for (int s = 0; s < 2 && ok; ++s) {
                const Mat a22 = av[2 * k + static_cast<std::size_t>(s)].bottomRightCorner(n - r, n - r);
                ok = condition_number(a22) < 1e12;
            }
        if (!ok) {
            out.warnings.push_back("discarded block singular; truncating instead of residualizing");
            residualize = false;
        }
    }

    out.A_vertex.resize(2 * nk);
    out.B.resize(nk);
    out.C.resize(nk);
    out.D.resize(nk);
    for (std::size_t k = 0; k < nk; ++k) {
        const Mat a0 = 0.5 * (av[2 * k] + av[2 * k + 1]);
        if (residualize) {
            const Eigen::PartialPivLU<Mat> lu0(a0.bottomRightCorner(n - r, n - r));
            for (int s = 0; s < 2; ++s) {
                const Mat& a = av[2 * k + static_cast<std::size_t>(s)];
                const Eigen::PartialPivLU<Mat> lu(a.bottomRightCorner(n - r, n - r));
                out.A_vertex[2 * k + static_cast<std::size_t>(s)] =
                    a.topLeftCorner(r, r) - a.topRightCorner(r, n - r) * lu.solve(a.bottomLeftCorner(n - r, r));
            }
            const Mat a21 = a0.bottomLeftCorner(n - r, r);
            const Mat a12 = a0.topRightCorner(r, n - r);
            const Mat b2 = b[k].bottomRows(n - r);
            const Mat c2 = c[k].rightCols(n - r);
            out.B[k] = b[k].topRows(r) - a12 * lu0.solve(b2);
            out.C[k] = c[k].leftCols(r) - c2 * lu0.solve(a21);
            out.D[k] = sub.D[k] - c2 * lu0.solve(b2);
        } else {
            for (int s = 0; s < 2; ++s)
                out.A_vertex[2 * k + static_cast<std::size_t>(s)] = av[2 * k + static_cast<std::size_t>(s)].topLeftCorner(r, r);
            out.B[k] = b[k].topRows(r);
            out.C[k] = c[k].leftCols(r);
            out.D[k] = sub.D[k];
        }
    }
    return out;
}

ReducedSubsystem passthrough(const Subsystem& sub)
{
    const std::size_t nk = sub.rho.size();
    ReducedSubsystem out;
    out.rho = sub.rho;
    out.rate_bound = sub.rate_bound;
    out.kept = static_cast<int>(sub.n_x());
    for (std::size_t k = 0; k < nk; ++k) {
        out.A_vertex.push_back(sub.vertex_A(k, 0));
        out.A_vertex.push_back(sub.vertex_A(k, 1));
    }
    out.B = sub.B;
    out.C = sub.C;
    out.D = sub.D;
    return out;
}

ReducedLpvModel reassemble(const std::vector<ReducedSubsystem>& parts, const std::vector<double>& rho,
                           double rate_bound, const std::vector<Mat>& d, int unstable_states, int integrators)
{
    const std::size_t nk = rho.size();
    if (d.size() != nk) throw Error("reassemble: one D per grid point required", "balred");
    ReducedLpvModel m;
    m.rho_grid = rho;
    m.rate_bound = rate_bound;
    m.n_u = static_cast<int>(d.front().cols());
    m.n_y = static_cast<int>(d.front().rows());
    m.unstable_states = unstable_states;
    m.integrators = integrators;
    Eigen::Index n = 0;
    for (const auto& p : parts) {
        if (p.A_vertex.size() != 2 * nk || p.B.size() != nk || p.C.size() != nk)
            throw Error("reassemble: part does not cover the grid", "balred");
        n += p.n_x();
    }
    m.n_x = static_cast<int>(n);
    for (std::size_t k = 0; k < nk; ++k) {
        Mat a[2] = {Mat::Zero(n, n), Mat::Zero(n, n)};
        Mat b = Mat::Zero(n, m.n_u), c = Mat::Zero(m.n_y, n);
        Eigen::Index off = 0;
        for (const auto& p : parts) {
            const Eigen::Index r = p.n_x();
            if (p.B[k].cols() != m.n_u || p.C[k].rows() != m.n_y || p.A_vertex[2 * k].rows() != r)
                throw Error("reassemble: dimension mismatch", "balred");
            for (int s = 0; s < 2; ++s) a[s].block(off, off, r, r) = p.A_vertex[2 * k + static_cast<std::size_t>(s)];
            b.middleRows(off, r) = p.B[k];
            c.middleCols(off, r) = p.C[k];
            off += r;
        }
        // residualized parts carry a corrected D; sum the corrections
        Mat dk = d[k];
        for (const auto& p : parts) dk += p.D[k] - d[k];
        m.points.push_back({rho[k], 0.5 * (a[0] + a[1]), b, c, dk});
        m.vertex_points.push_back({rho[k], -rate_bound, a[0]});
        m.vertex_points.push_back({rho[k], rate_bound, a[1]});
    }
    return m;
}

std::string singular_values_csv(const BalancingFactors& f)
{
    std::ostringstream out;
    out.precision(17);
    out << "j,k,rho,sigma\n";
    for (std::size_t k = 0; k < f.S.size(); ++k)
        for (Eigen::Index j = 0; j < f.S[k].size(); ++j) out << j << ',' << k << ',' << f.rho[k] << ',' << f.S[k](j) << '\n';
    return out.str();
}

} // namespace lpvmor
