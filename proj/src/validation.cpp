#include "lpvmor/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lpvmor {
namespace {

CMat inv_sqrt_hermitian(const CMat& m)
{
    const Eigen::SelfAdjointEigenSolver<CMat> es(m);
    const Vec d = es.eigenvalues().cwiseSqrt().cwiseInverse();
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

std::string pole_rows(const std::vector<double>& rho, const std::vector<GridPoint>& points)
{
    std::ostringstream out;
    out.precision(17);
    out << "k,rho,re,im\n";
    for (std::size_t k = 0; k < points.size(); ++k) {
        if (points[k].A.rows() == 0) continue;
        const Eigen::VectorXcd ev = Eigen::EigenSolver<Mat>(points[k].A, false).eigenvalues();
        std::vector<cplx> v(ev.data(), ev.data() + ev.size());
        std::sort(v.begin(), v.end(), [](cplx a, cplx b) { return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag(); });
        for (const cplx& z : v) out << k << ',' << rho[k] << ',' << z.real() << ',' << z.imag() << '\n';
    }
    return out.str();
}

} // namespace

std::vector<double> log_frequency_grid(double lo, double hi, int count)
{
    if (!(lo > 0.0) || !(hi > lo) || count < 1) throw Error("frequency grid needs 0 < lo < hi and count >= 1", "validation");
    std::vector<double> w(static_cast<std::size_t>(count));
    if (count == 1) {
        w[0] = lo;
        return w;
    }
    const double a = std::log10(lo), b = std::log10(hi);
    for (int i = 0; i < count; ++i) w[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (count - 1));
    return w;
}

std::vector<double> gap_rho_samples(const std::vector<double>& grid)
{
    std::vector<double> out;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        out.push_back(grid[k]);
        if (k + 1 < grid.size()) out.push_back(0.5 * (grid[k] + grid[k + 1]));
    }
    return out;
}

FrequencyResponse::FrequencyResponse(const LtiSnapshot& g) : d_(g.D)
{
    const Eigen::Index n = g.A.rows();
    if (n == 0) return;
    const Eigen::HessenbergDecomposition<Mat> hd(g.A);
    const Mat q = hd.matrixQ();
    h_ = Mat(hd.matrixH()).cast<cplx>();
    b_ = (q.transpose() * g.B).cast<cplx>();
    c_ = (g.C * q).cast<cplx>();
}

CMat FrequencyResponse::operator()(double w) const
{
    const Eigen::Index n = h_.rows();
    CMat out = d_.cast<cplx>();
    if (n == 0) return out;
    CMat m = -h_;
    m.diagonal().array() += cplx(0.0, w);
    CMat r = b_;
    const double scale = std::max({1.0, std::abs(w), h_.cwiseAbs().maxCoeff()});
    // Gaussian elimination with partial pivoting on the single subdiagonal.
    for (Eigen::Index j = 0; j + 1 < n; ++j) {
        if (std::abs(m(j + 1, j)) > std::abs(m(j, j))) {
            m.row(j).tail(n - j).swap(m.row(j + 1).tail(n - j));
            r.row(j).swap(r.row(j + 1));
        }
        if (m(j + 1, j) == cplx(0.0)) continue;
        const cplx l = m(j + 1, j) / m(j, j);
        m.row(j + 1).tail(n - j) -= l * m.row(j).tail(n - j);
        r.row(j + 1) -= l * r.row(j);
    }
    for (Eigen::Index j = 0; j < n; ++j)
        if (std::abs(m(j, j)) < 1e-12 * scale) {
            std::ostringstream msg;
            msg << "resolvent singular at omega = " << w;
            throw Error(msg.str(), "validation");
        }
    m.triangularView<Eigen::Upper>().solveInPlace(r);
    out += c_ * r;
    return out;
}

CMat freq_response(const LtiSnapshot& g, double w) { return FrequencyResponse(g)(w); }

double chordal_distance(const CMat& g1, const CMat& g2)
{
    const Eigen::Index ny = g1.rows(), nu = g1.cols();
    const CMat left = inv_sqrt_hermitian(CMat::Identity(ny, ny) + g2 * g2.adjoint());
    const CMat right = inv_sqrt_hermitian(CMat::Identity(nu, nu) + g1.adjoint() * g1);
    const CMat k = left * (g1 - g2) * right;
    if (k.size() == 0) return 0.0;
    const double s = Eigen::JacobiSVD<CMat>(k).singularValues()(0);
    return std::clamp(s, 0.0, 1.0);
}

double nu_gap(const LtiSnapshot& g1, const LtiSnapshot& g2, const std::vector<double>& omega)
{
    if (g1.n_u() != g2.n_u() || g1.n_y() != g2.n_y()) throw Error("nu_gap: input/output dimensions differ", "validation");
    const FrequencyResponse f1(g1), f2(g2);
    double g = 0.0;
    for (double w : omega) g = std::max(g, chordal_distance(f1(w), f2(w)));
    return g;
}

Mat gap_table(const GridLpvModel& full, const ReducedLpvModel& reduced, const std::vector<double>& omega,
              const std::vector<double>& rho_samples, Exec exec)
{
    if (full.n_u != reduced.n_u || full.n_y != reduced.n_y)
        throw Error("full and reduced models have different input/output dimensions", "validation");
    const auto nr = static_cast<Eigen::Index>(rho_samples.size());
    const auto nw = static_cast<Eigen::Index>(omega.size());
    Mat t(nr, nw);
    std::vector<FrequencyResponse> f1, f2;
    for (double rho : rho_samples) {
        f1.emplace_back(interpolate(full, rho));
        f2.emplace_back(interpolate(reduced, rho, 0.0));
    }
    for_each_index(exec, nr * nw, [&](std::ptrdiff_t idx) {
        const Eigen::Index i = idx / nw, j = idx % nw;
        const double w = omega[static_cast<std::size_t>(j)];
        t(i, j) = chordal_distance(f1[static_cast<std::size_t>(i)](w), f2[static_cast<std::size_t>(i)](w));
    });
    return t;
}

std::vector<double> pointwise_gap(const GridLpvModel& full, const ReducedLpvModel& reduced,
                                  const std::vector<double>& omega, const std::vector<double>& rho_samples, Exec exec)
{
    const Mat t = gap_table(full, reduced, omega, rho_samples, exec);
    std::vector<double> out(static_cast<std::size_t>(t.rows()));
    for (Eigen::Index i = 0; i < t.rows(); ++i) out[static_cast<std::size_t>(i)] = t.row(i).maxCoeff();
    return out;
}

std::vector<double> frequencywise_gap(const GridLpvModel& full, const ReducedLpvModel& reduced,
                                      const std::vector<double>& omega, const std::vector<double>& rho_samples,
                                      Exec exec)
{
    const Mat t = gap_table(full, reduced, omega, rho_samples, exec);
    std::vector<double> out(static_cast<std::size_t>(t.cols()));
    for (Eigen::Index j = 0; j < t.cols(); ++j) out[static_cast<std::size_t>(j)] = t.col(j).maxCoeff();
    return out;
}

ValidationReport validate_models(const GridLpvModel& full, const ReducedLpvModel& reduced,
                                 const ValidationConfig& config, Exec exec)
{
    ValidationReport r;
    r.omega = log_frequency_grid(config.omega_min, config.omega_max, config.omega_count);
    r.rho = config.midpoints ? gap_rho_samples(full.rho_grid) : full.rho_grid;
    const Mat t = gap_table(full, reduced, r.omega, r.rho, exec);
    for (Eigen::Index i = 0; i < t.rows(); ++i) r.pointwise.push_back(t.row(i).maxCoeff());
    for (Eigen::Index j = 0; j < t.cols(); ++j) r.frequencywise.push_back(t.col(j).maxCoeff());
    r.max_gap = t.size() ? t.maxCoeff() : 0.0;

    const double lo = full.rho_min(), hi = full.rho_max();
    const double mid = 0.5 * (lo + hi), amp = 0.45 * (hi - lo);
    const double rate = full.rate_bound;
    const double w = amp > 0.0 && rate > 0.0 ? rate / amp : 0.0;
    const auto nu = static_cast<Eigen::Index>(full.n_u);
    std::vector<std::function<Vec(double)>> inputs = {
        [nu](double) { return Vec(Vec::Ones(nu)); },
        [nu](double tt) { return Vec(Vec::Constant(nu, std::sin(tt))); },
    };
    r.sim_discrepancy.assign(inputs.size(), 0.0);
    std::vector<std::string> notes(inputs.size());
    for_each_index(exec, static_cast<std::ptrdiff_t>(inputs.size()), [&](std::ptrdiff_t i) {
        Scenario sc;
        sc.rho = [=](double tt) { return mid + amp * std::sin(w * tt); };
        sc.rhodot = [=](double tt) { return amp * w * std::cos(w * tt); };
        sc.u = inputs[static_cast<std::size_t>(i)];
        sc.t_end = config.sim_t_end;
        sc.dt = config.sim_dt;
        try {
            const SimulationResult a = simulate(full, sc);
            const SimulationResult b = simulate(reduced, sc);
            r.sim_discrepancy[static_cast<std::size_t>(i)] = relative_l2(a.y, b.y);
        } catch (const Error& e) {
            r.sim_discrepancy[static_cast<std::size_t>(i)] = std::numeric_limits<double>::infinity();
            notes[static_cast<std::size_t>(i)] = e.what();
        }
    });
    for (const auto& n : notes)
        if (!n.empty()) r.warnings.push_back("simulation: " + n);
    return r;
}

std::string pole_map_csv(const GridLpvModel& model) { return pole_rows(model.rho_grid, model.points); }

std::string pole_map_csv(const ReducedLpvModel& model) { return pole_rows(model.rho_grid, model.points); }

std::string pointwise_gap_csv(const ValidationReport& r)
{
    std::ostringstream out;
    out.precision(17);
    out << "rho,gap\n";
    for (std::size_t i = 0; i < r.rho.size(); ++i) out << r.rho[i] << ',' << r.pointwise[i] << '\n';
    return out.str();
}

std::string frequencywise_gap_csv(const ValidationReport& r)
{
    std::ostringstream out;
    out.precision(17);
    out << "omega,gap\n";
    for (std::size_t i = 0; i < r.omega.size(); ++i) out << r.omega[i] << ',' << r.frequencywise[i] << '\n';
    return out.str();
}

} // namespace lpvmor
