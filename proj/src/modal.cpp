#include "lpvmor/modal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lpvmor/linalg.hpp"

namespace lpvmor {
namespace {

Mat lerp(const std::vector<Mat>& m, const std::vector<double>& grid, double rho)
{
    const std::size_t k = bracket(grid, rho);
    const double th = (rho - grid[k]) / (grid[k + 1] - grid[k]);
    if (th == 0.0) return m[k];
    if (th == 1.0) return m[k + 1];
    return (1.0 - th) * m[k] + th * m[k + 1];
}

Mat block_diagonal_part(const Mat& full, const std::vector<ModalBlock>& blocks)
{
    Mat out = Mat::Zero(full.rows(), full.cols());
    for (const auto& b : blocks) out.block(b.offset, b.offset, b.size, b.size) = full.block(b.offset, b.offset, b.size, b.size);
    return out;
}

Mat select(const Mat& m, const std::vector<Eigen::Index>& rows, const std::vector<Eigen::Index>& cols)
{
    Mat out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(rows[i], cols[j]);
    return out;
}

std::vector<Eigen::Index> all_indices(Eigen::Index n)
{
    std::vector<Eigen::Index> v(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i;
    return v;
}

} // namespace

GridLpvModel ModalForm::as_grid_model() const
{
    GridLpvModel g;
    g.n_x = static_cast<int>(n_x());
    g.n_u = static_cast<int>(B.front().cols());
    g.n_y = static_cast<int>(C.front().rows());
    g.rho_grid = rho;
    g.rate_bound = rate_bound;
    for (std::size_t k = 0; k < rho.size(); ++k) g.points.push_back({rho[k], A[k], B[k], C[k], D[k]});
    return g;
}

std::vector<Mat> build_local_transforms(const std::vector<BlockSequence>& seq,
                                        const std::vector<MultiplicityGroup>& groups, const ModeTrajectorySet& traj,
                                        std::vector<ModalBlock>* blocks, double cond_max)
{
    const std::size_t nk = traj.grid_size();
    const Eigen::Index n = traj.size();
    std::vector<ModalBlock> layout;
    Eigen::Index offset = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        ModalBlock b;
        b.group = static_cast<int>(g);
        b.offset = offset;
        b.complex = groups[g].kind == GroupKind::complex;
        b.mode_class = groups[g].mode_class;
        if (b.complex) {
            b.trajectories = groups[g].canonical;
            for (int c : groups[g].canonical) b.trajectories.push_back(traj.partner[static_cast<std::size_t>(c)]);
        } else {
            b.trajectories = groups[g].members;
        }
        b.size = static_cast<Eigen::Index>(b.trajectories.size());
        offset += b.size;
        layout.push_back(std::move(b));
    }
    if (offset != n) throw Error("modal transform: block sizes sum to " + std::to_string(offset) + ", expected " +
                                     std::to_string(n),
                                 "modal");

    std::vector<Mat> t(nk, Mat(n, n));
    for (std::size_t k = 0; k < nk; ++k) {
        for (const auto& b : layout) {
            const CMat& v = seq[static_cast<std::size_t>(b.group)][k];
            if (b.complex) {
                const Eigen::Index d = v.cols();
                t[k].middleCols(b.offset, d) = v.real();
                t[k].middleCols(b.offset + d, d) = v.imag();
            } else {
                t[k].middleCols(b.offset, b.size) = v.real();
            }
        }
        const double c = condition_number(t[k]);
        if (!(c <= cond_max)) {
            std::ostringstream msg;
            msg << "modal transform singular at grid point " << k << " (condition number " << c << ")";
            throw Error(msg.str(), "modal");
        }
    }
    if (blocks) *blocks = std::move(layout);
    return t;
}

ModalForm assemble_modal(const GridLpvModel& model, std::vector<Mat> transforms, std::vector<ModalBlock> blocks,
                         Exec exec)
{
    const std::size_t nk = model.size();
    if (transforms.size() != nk) throw Error("assemble_modal: one transform per grid point required", "modal");
    ModalForm m;
    m.rho = model.rho_grid;
    m.rate_bound = model.rate_bound;
    m.blocks = std::move(blocks);
    m.spline = CubicSpline(model.rho_grid, transforms);
    m.T = std::move(transforms);
    m.T_inv.resize(nk);
    m.dT.resize(nk);
    m.A.resize(nk);
    m.B.resize(nk);
    m.C.resize(nk);
    m.D.resize(nk);
    m.E_unit.resize(nk);
    m.offblock_residual.resize(nk);
    for_each_index(exec, static_cast<std::ptrdiff_t>(nk), [&](std::ptrdiff_t ki) {
        const auto k = static_cast<std::size_t>(ki);
        const auto& p = model.points[k];
        const Eigen::PartialPivLU<Mat> lu(m.T[k]);
        m.T_inv[k] = lu.inverse();
        const Mat full = lu.solve(p.A * m.T[k]);
        m.A[k] = block_diagonal_part(full, m.blocks);
        const double na = m.A[k].norm();
        const double off = (full - m.A[k]).norm();
        m.offblock_residual[k] = na > 0.0 ? off / na : off;
        m.B[k] = lu.solve(p.B);
        m.C[k] = p.C * m.T[k];
        m.D[k] = p.D;
        m.dT[k] = m.spline.derivative(model.rho_grid[k]);
        m.E_unit[k] = -lu.solve(m.dT[k]);
    });
    return m;
}

DerivativeStats transform_derivative_stats(const std::vector<double>& rho, const std::vector<Mat>& transforms)
{
    const std::vector<Mat> d = spline_knot_derivatives(rho, transforms);
    DerivativeStats s;
    for (const auto& m : d) {
        const double e = m.cwiseAbs().maxCoeff();
        s.max = std::max(s.max, e);
        s.mean += e;
    }
    s.mean /= static_cast<double>(d.size());
    return s;
}

std::vector<Eigen::Index> stable_states(const ModalForm& modal)
{
    std::vector<Eigen::Index> out;
    for (const auto& b : modal.blocks)
        if (b.mode_class == ModeClass::stable)
            for (Eigen::Index i = 0; i < b.size; ++i) out.push_back(b.offset + i);
    return out;
}

std::vector<int> state_trajectories(const ModalForm& modal)
{
    std::vector<int> out(static_cast<std::size_t>(modal.n_x()), -1);
    for (const auto& b : modal.blocks)
        for (Eigen::Index i = 0; i < b.size; ++i)
            out[static_cast<std::size_t>(b.offset + i)] = b.trajectories[static_cast<std::size_t>(i)];
    return out;
}

CouplingReport coupling_significance(ModalForm& modal, const GridLpvModel& model, const CouplingConfig& config,
                                     Exec exec)
{
    CouplingReport rep;
    const std::size_t nk = modal.size();
    double emax = 0.0;
    for (std::size_t k = 0; k < nk; ++k) {
        rep.e_norms.push_back(spectral_norm(modal.E(k, 1)));
        emax = std::max(emax, rep.e_norms.back());
    }

    for (std::size_t k = 0; k + 1 < nk; ++k) {
        const double rm = 0.5 * (modal.rho[k] + modal.rho[k + 1]);
        const Mat tm = modal.spline.evaluate(rm);
        const Mat am = interpolate(model, rm).A;
        const Mat full = tm.partialPivLu().solve(am * tm);
        const Mat bar = 0.5 * (modal.A[k] + modal.A[k + 1]);
        const double nb = bar.norm();
        rep.midpoint_residual = std::max(rep.midpoint_residual, nb > 0.0 ? (full - bar).norm() / nb : (full - bar).norm());
    }

    const std::vector<Eigen::Index> st = stable_states(modal);
    if (modal.rate_bound == 0.0 || emax == 0.0 || st.empty()) {
        rep.drop = true;
        rep.note = st.empty() ? "no stable states" : "coupling term vanishes";
        modal.neglect_coupling = true;
        return rep;
    }

    const std::vector<Eigen::Index> in = all_indices(modal.B.front().cols());
    const std::vector<Eigen::Index> out = all_indices(modal.C.front().rows());
    std::vector<Mat> a(nk), e(nk), b(nk), c(nk);
    double anorm = 0.0;
    for (std::size_t k = 0; k < nk; ++k) {
        a[k] = select(modal.A[k], st, st);
        e[k] = select(modal.E_unit[k], st, st);
        b[k] = select(modal.B[k], st, in);
        c[k] = select(modal.C[k], out, st);
        anorm = std::max(anorm, spectral_norm(a[k]));
    }
    const std::vector<double>& grid = modal.rho;
    auto view = [&](bool coupled) {
        return LpvView([&, coupled](double rho, double rhodot) {
            LtiSnapshot s;
            s.rho = rho;
            s.A = lerp(a, grid, rho);
            if (coupled) s.A += rhodot * lerp(e, grid, rho);
            s.B = lerp(b, grid, rho);
            s.C = lerp(c, grid, rho);
            s.D = lerp(modal.D, grid, rho);
            return s;
        });
    };
    const LpvView with_e = view(true);
    const LpvView without_e = view(false);

    const double lo = grid.front(), hi = grid.back();
    const double t_end = std::min(2.0 * (hi - lo) / modal.rate_bound, config.max_sweep_time);
    double dt = std::min(0.01, anorm > 0.0 ? 1.0 / anorm : 0.01);
    if (t_end / dt > static_cast<double>(config.max_steps)) dt = t_end / static_cast<double>(config.max_steps);
    const double top = std::min(hi, lo + 0.5 * t_end * modal.rate_bound);

    const auto nu = static_cast<Eigen::Index>(in.size());
    std::vector<std::function<Vec(double)>> bank;
    for (Eigen::Index j = 0; j < nu; ++j) {
        bank.emplace_back([=](double) { return Vec(Vec::Unit(nu, j)); });
        bank.emplace_back([=](double t) {
            const double w0 = 0.1, w1 = 10.0;
            const double phase = w0 * t + 0.5 * (w1 - w0) * t * t / t_end;
            return Vec(Vec::Unit(nu, j) * std::sin(phase));
        });
    }
    rep.discrepancies.assign(bank.size(), 0.0);
    std::vector<std::string> notes(bank.size());
    for_each_index(exec, static_cast<std::ptrdiff_t>(bank.size()), [&](std::ptrdiff_t i) {
        const Scenario sc = triangular_sweep(lo, top, t_end, dt, bank[static_cast<std::size_t>(i)]);
        try {
            const SimulationResult r1 = simulate(with_e, static_cast<Eigen::Index>(st.size()), sc);
            const SimulationResult r0 = simulate(without_e, static_cast<Eigen::Index>(st.size()), sc);
            rep.discrepancies[static_cast<std::size_t>(i)] = relative_l2(r1.y, r0.y);
        } catch (const Error& err) {
            rep.discrepancies[static_cast<std::size_t>(i)] = std::numeric_limits<double>::infinity();
            notes[static_cast<std::size_t>(i)] = err.what();
        }
    });
    for (std::size_t i = 0; i < bank.size(); ++i) {
        rep.discrepancy = std::max(rep.discrepancy, rep.discrepancies[i]);
        if (!notes[i].empty() && rep.note.empty()) rep.note = "divergence: " + notes[i];
    }
    rep.drop = rep.discrepancy <= config.drop_tol;
    modal.neglect_coupling = rep.drop;
    return rep;
}

} // namespace lpvmor
