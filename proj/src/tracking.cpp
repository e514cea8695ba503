#include "lpvmor/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lpvmor/assignment.hpp"
#include "lpvmor/linalg.hpp"

namespace lpvmor {
namespace {

constexpr double pi = 3.14159265358979323846;

void swap_columns(std::size_t k, int a, int b, ModeTrajectorySet& t)
{
    if (a == b) return;
    std::swap(t.values[k](a), t.values[k](b));
    t.vectors[k].col(a).swap(t.vectors[k].col(b));
}

double conj_gap(const ModeTrajectorySet& t, std::size_t k, int i, int j)
{
    return std::abs(t.values[k](j) - std::conj(t.values[k](i)));
}

// Index holding conj(lambda_i), preferring i's own partner and then an
// unpartnered trajectory among equally close candidates.
int find_conjugate(const ModeTrajectorySet& t, std::size_t k, int i, const std::vector<char>& is_int)
{
    double dmin = -1.0;
    for (int j = 0; j < t.size(); ++j) {
        if (j == i || is_int[static_cast<std::size_t>(j)]) continue;
        const double d = conj_gap(t, k, i, j);
        if (dmin < 0.0 || d < dmin) dmin = d;
    }
    if (dmin < 0.0) return -1;
    const double tol = dmin + 1e-12 * std::max(1.0, std::abs(t.values[k](i)));
    const int own = t.partner[static_cast<std::size_t>(i)];
    if (own >= 0 && conj_gap(t, k, i, own) <= tol) return own;
    int first = -1;
    for (int j = 0; j < t.size(); ++j) {
        if (j == i || is_int[static_cast<std::size_t>(j)] || conj_gap(t, k, i, j) > tol) continue;
        if (t.partner[static_cast<std::size_t>(j)] < 0) return j;
        if (first < 0) first = j;
    }
    return first;
}

// Keeps conjugate partners consistent at point k: every complex value must sit
// opposite its established partner, and the canonical member keeps Im > 0.
void fix_pairs(std::size_t k, ModeTrajectorySet& t, std::vector<char>& canonical, const std::vector<char>& is_int)
{
    const int n = t.size();
    for (int pass = 0; pass <= n; ++pass) {
        bool changed = false;
        for (int i = 0; i < n && !changed; ++i) {
            if (is_int[static_cast<std::size_t>(i)] || is_real_value(t.values[k](i))) continue;
            const int j = find_conjugate(t, k, i, is_int);
            if (j < 0) continue;
            int& pi_ = t.partner[static_cast<std::size_t>(i)];
            int& pj = t.partner[static_cast<std::size_t>(j)];
            if (pi_ == j) continue;
            if (pi_ < 0 && pj < 0) {
                pi_ = j;
                pj = i;
                const bool upper = t.values[k](i).imag() > 0.0;
                canonical[static_cast<std::size_t>(i)] = upper;
                canonical[static_cast<std::size_t>(j)] = !upper;
                continue;
            }
            if (pi_ >= 0) swap_columns(k, pi_, j, t);
            else swap_columns(k, i, pj, t);
            changed = true;
        }
        if (!changed) break;
    }
    for (int i = 0; i < n; ++i) {
        const int p = t.partner[static_cast<std::size_t>(i)];
        if (p < 0 || !canonical[static_cast<std::size_t>(i)]) continue;
        if (!is_real_value(t.values[k](i)) && t.values[k](i).imag() < 0.0) swap_columns(k, i, p, t);
    }
}

int find_root(std::vector<int>& parent, int i)
{
    while (parent[static_cast<std::size_t>(i)] != i) {
        parent[static_cast<std::size_t>(i)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
        i = parent[static_cast<std::size_t>(i)];
    }
    return i;
}

void unite(std::vector<int>& parent, int a, int b)
{
    a = find_root(parent, a);
    b = find_root(parent, b);
    if (a == b) return;
    if (a < b) parent[static_cast<std::size_t>(b)] = a;
    else parent[static_cast<std::size_t>(a)] = b;
}

double pair_distance(const ModeTrajectorySet& t, const CMat& z, int i, int j, bool mac)
{
    double direct = 0.0, mirrored = 0.0;
    for (Eigen::Index k = 0; k < z.rows(); ++k) {
        double hd = hyperbolic_distance(z(k, i), z(k, j));
        double hm = hyperbolic_distance(z(k, i), std::conj(z(k, j)));
        if (mac) {
            const auto& v = t.vectors[static_cast<std::size_t>(k)];
            hd *= 1.0 - std::min(1.0, std::abs(v.col(i).dot(v.col(j))));
            hm *= 1.0 - std::min(1.0, std::abs(v.col(i).dot(v.col(j).conjugate())));
        }
        direct = std::max(direct, hd);
        mirrored = std::max(mirrored, hm);
    }
    return std::min(direct, mirrored);
}

} // namespace

EigenGrid decompose_grid(const GridLpvModel& model, Exec exec, double cond_max)
{
    const std::size_t n = model.size();
    EigenGrid g;
    g.rho = model.rho_grid;
    g.values.resize(n);
    g.vectors.resize(n);
    g.condition.resize(n);
    for_each_index(exec, static_cast<std::ptrdiff_t>(n), [&](std::ptrdiff_t k) {
        const auto kk = static_cast<std::size_t>(k);
        try {
            EigenDecomposition e = eig_decompose(model.points[kk].A, cond_max);
            g.values[kk] = std::move(e.values);
            g.vectors[kk] = std::move(e.vectors);
            g.condition[kk] = e.condition;
        } catch (const Error& err) {
            throw Error("grid point " + std::to_string(kk) + ": " + err.what(), "tracking");
        }
    });
    return g;
}

double auto_sampling_time(const EigenGrid& grid, double tol_int)
{
    double m = 0.0;
    for (const auto& v : grid.values)
        for (Eigen::Index i = 0; i < v.size(); ++i)
            if (std::abs(v(i)) > tol_int) m = std::max(m, std::abs(v(i)));
    return m > 0.0 ? std::min(0.01, 0.5 / m) : 0.01;
}

cplx to_disk(cplx lambda, double ts)
{
    if (!(ts > 0.0)) throw Error("to_disk: sampling time must be positive");
    if (std::abs(lambda.imag()) * ts >= pi) {
        std::ostringstream msg;
        msg << "to_disk: aliasing, |Im lambda| Ts = " << std::abs(lambda.imag()) * ts
            << " >= pi; use a smaller sampling time";
        throw Error(msg.str());
    }
    const cplx z = std::exp(lambda * ts);
    if (std::abs(std::abs(z) - 1.0) <= 1e-12) {
        std::ostringstream msg;
        msg << "imaginary-axis eigenvalue (" << lambda.real() << "," << lambda.imag() << ")";
        throw Error(msg.str());
    }
    return lambda.real() < 0.0 ? z : 1.0 / std::conj(z);
}

double hyperbolic_distance(cplx z1, cplx z2)
{
    if (!(std::abs(z1) < 1.0) || !(std::abs(z2) < 1.0))
        throw Error("hyperbolic_distance: argument not inside the unit disk");
    if (z1 == z2) return 0.0;
    return std::abs(z1 - z2) / std::abs(1.0 - std::conj(z1) * z2);
}

double weighted_distance(cplx l1, const CVec& v1, cplx l2, const CVec& v2, double ts, bool mac)
{
    const double h = hyperbolic_distance(to_disk(l1, ts), to_disk(l2, ts));
    if (!mac) return h;
    return h * (1.0 - std::min(1.0, std::abs(v1.dot(v2))));
}

Mat transition_costs(const CVec& l1, const CMat& v1, const CVec& l2, const CMat& v2, double ts, bool mac, Exec exec)
{
    const Eigen::Index n = l1.size();
    const Eigen::Index m = l2.size();
    CVec z1(n), z2(m);
    for (Eigen::Index i = 0; i < n; ++i) z1(i) = to_disk(l1(i), ts);
    for (Eigen::Index j = 0; j < m; ++j) z2(j) = to_disk(l2(j), ts);
    Mat c(n, m);
    for_each_index(exec, n, [&](std::ptrdiff_t i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            double h = hyperbolic_distance(z1(i), z2(j));
            if (mac) h *= 1.0 - std::min(1.0, std::abs(v1.col(i).dot(v2.col(j))));
            c(i, j) = h;
        }
    });
    return c;
}

std::string to_string(ModeClass c)
{
    switch (c) {
    case ModeClass::stable: return "stable";
    case ModeClass::unstable: return "unstable";
    case ModeClass::mixed: return "mixed";
    case ModeClass::integrator: return "integrator";
    }
    return "unknown";
}

bool is_real_value(cplx z) { return std::abs(z.imag()) <= 1e-12 * std::max(1.0, std::abs(z)); }

std::vector<int> ModeTrajectorySet::integrators() const
{
    std::vector<int> out;
    for (std::size_t i = 0; i < mode_class.size(); ++i)
        if (mode_class[i] == ModeClass::integrator) out.push_back(static_cast<int>(i));
    return out;
}

std::vector<std::vector<int>> detect_integrators(const EigenGrid& grid, double tol_int)
{
    std::vector<std::vector<int>> out(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        for (Eigen::Index i = 0; i < grid.values[k].size(); ++i)
            if (std::abs(grid.values[k](i)) <= tol_int) out[k].push_back(static_cast<int>(i));
        if (out[k].size() != out[0].size())
            throw Error("integrator count changes from " + std::to_string(out[0].size()) + " to " +
                            std::to_string(out[k].size()) + " at grid point " + std::to_string(k),
                        "tracking");
    }
    return out;
}

ModeTrajectorySet match_grid(const EigenGrid& grid, const TrackingConfig& config, Exec exec)
{
    const std::size_t nk = grid.size();
    if (nk == 0) throw Error("match_grid: empty grid", "tracking");
    const int n = static_cast<int>(grid.values[0].size());
    const auto ints = detect_integrators(grid, config.tol_int);

    ModeTrajectorySet t;
    t.rho = grid.rho;
    t.sampling_time = config.sampling_time > 0.0 ? config.sampling_time : auto_sampling_time(grid, config.tol_int);
    t.values.resize(nk);
    t.vectors.resize(nk);
    t.partner.assign(static_cast<std::size_t>(n), -1);
    t.group.assign(static_cast<std::size_t>(n), -1);
    t.values[0] = grid.values[0];
    t.vectors[0] = grid.vectors[0];

    std::vector<char> is_int(static_cast<std::size_t>(n), 0);
    for (int i : ints[0]) is_int[static_cast<std::size_t>(i)] = 1;
    std::vector<int> traj_int, traj_free;
    for (int i = 0; i < n; ++i) (is_int[static_cast<std::size_t>(i)] ? traj_int : traj_free).push_back(i);
    std::vector<char> canonical(static_cast<std::size_t>(n), 0);

    try {
        fix_pairs(0, t, canonical, is_int);
        for (std::size_t k = 0; k + 1 < nk; ++k) {
            const CVec& lam = grid.values[k + 1];
            const CMat& vec = grid.vectors[k + 1];
            std::vector<char> raw_int(static_cast<std::size_t>(n), 0);
            for (int r : ints[k + 1]) raw_int[static_cast<std::size_t>(r)] = 1;
            std::vector<int> raw_free;
            for (int r = 0; r < n; ++r)
                if (!raw_int[static_cast<std::size_t>(r)]) raw_free.push_back(r);

            const auto m = static_cast<Eigen::Index>(traj_free.size());
            CVec l1(m), l2(m);
            CMat v1(n, m), v2(n, m);
            for (Eigen::Index a = 0; a < m; ++a) {
                l1(a) = t.values[k](traj_free[static_cast<std::size_t>(a)]);
                v1.col(a) = t.vectors[k].col(traj_free[static_cast<std::size_t>(a)]);
                l2(a) = lam(raw_free[static_cast<std::size_t>(a)]);
                v2.col(a) = vec.col(raw_free[static_cast<std::size_t>(a)]);
            }
            const Assignment asg = solve_assignment(transition_costs(l1, v1, l2, v2, t.sampling_time,
                                                                     config.mac_weighting, exec));
            t.values[k + 1].resize(n);
            t.vectors[k + 1].resize(n, n);
            for (std::size_t a = 0; a < traj_free.size(); ++a) {
                const int src = raw_free[static_cast<std::size_t>(asg.col_of_row[a])];
                t.values[k + 1](traj_free[a]) = lam(src);
                t.vectors[k + 1].col(traj_free[a]) = vec.col(src);
            }
            for (std::size_t a = 0; a < traj_int.size(); ++a) {
                const int src = ints[k + 1][a];
                t.values[k + 1](traj_int[a]) = lam(src);
                t.vectors[k + 1].col(traj_int[a]) = vec.col(src);
            }
            fix_pairs(k + 1, t, canonical, is_int);
        }
    } catch (const Error& e) {
        throw Error(e.what(), "tracking");
    }

    const double tol = config.tol_int;
    t.mode_class.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        if (is_int[static_cast<std::size_t>(i)]) {
            t.mode_class[static_cast<std::size_t>(i)] = ModeClass::integrator;
            continue;
        }
        bool stable = true, unstable = true;
        for (std::size_t k = 0; k < nk; ++k) {
            const double re = t.values[k](i).real();
            stable = stable && re < -tol;
            unstable = unstable && re > tol;
        }
        t.mode_class[static_cast<std::size_t>(i)] =
            stable ? ModeClass::stable : (unstable ? ModeClass::unstable : ModeClass::mixed);
    }
    return t;
}

CMat disk_values(const ModeTrajectorySet& traj)
{
    const auto nk = static_cast<Eigen::Index>(traj.grid_size());
    CMat z = CMat::Zero(nk, traj.size());
    for (Eigen::Index k = 0; k < nk; ++k)
        for (int i = 0; i < traj.size(); ++i)
            if (traj.mode_class[static_cast<std::size_t>(i)] != ModeClass::integrator)
                z(k, i) = to_disk(traj.values[static_cast<std::size_t>(k)](i), traj.sampling_time);
    return z;
}

Mat trajectory_distances(const ModeTrajectorySet& traj, bool mac, Exec exec)
{
    const int n = traj.size();
    const CMat z = disk_values(traj);
    Mat h = Mat::Zero(n, n);
    for_each_index(exec, n, [&](std::ptrdiff_t i) {
        if (traj.mode_class[static_cast<std::size_t>(i)] == ModeClass::integrator) return;
        for (int j = 0; j < n; ++j) {
            if (j == i || traj.mode_class[static_cast<std::size_t>(j)] == ModeClass::integrator) continue;
            // Evaluate in (min, max) index order so H(i, j) and H(j, i) are bitwise equal.
            const int a = std::min(static_cast<int>(i), j);
            const int b = std::max(static_cast<int>(i), j);
            h(i, j) = pair_distance(traj, z, a, b, mac);
        }
    });
    return h;
}

double trajectory_distance(const ModeTrajectorySet& traj, int i, int j, bool mac)
{
    return pair_distance(traj, disk_values(traj), std::min(i, j), std::max(i, j), mac);
}

std::vector<MultiplicityGroup> detect_multiplicity(ModeTrajectorySet& traj, const Mat& h, double threshold)
{
    const int n = traj.size();
    std::vector<int> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    int first_int = -1;
    for (int i = 0; i < n; ++i) {
        const bool ii = traj.mode_class[static_cast<std::size_t>(i)] == ModeClass::integrator;
        if (ii) {
            if (first_int < 0) first_int = i;
            else unite(parent, first_int, i);
            continue;
        }
        if (traj.partner[static_cast<std::size_t>(i)] >= 0) unite(parent, i, traj.partner[static_cast<std::size_t>(i)]);
        for (int j = i + 1; j < n; ++j) {
            if (traj.mode_class[static_cast<std::size_t>(j)] == ModeClass::integrator) continue;
            if (h(i, j) < threshold) unite(parent, i, j);
        }
    }

    std::vector<MultiplicityGroup> groups;
    std::vector<int> gid(static_cast<std::size_t>(n), -1);
    for (int i = 0; i < n; ++i) {
        const int r = find_root(parent, i);
        if (gid[static_cast<std::size_t>(r)] < 0) {
            gid[static_cast<std::size_t>(r)] = static_cast<int>(groups.size());
            groups.emplace_back();
        }
        groups[static_cast<std::size_t>(gid[static_cast<std::size_t>(r)])].members.push_back(i);
        traj.group[static_cast<std::size_t>(i)] = gid[static_cast<std::size_t>(r)];
    }

    for (auto& g : groups) {
        bool all_real = true, all_complex = true;
        for (int i : g.members) {
            for (std::size_t k = 0; k < traj.grid_size(); ++k) {
                const bool re = is_real_value(traj.values[k](i));
                all_real = all_real && re;
                all_complex = all_complex && !re;
            }
        }
        const ModeClass c0 = traj.mode_class[static_cast<std::size_t>(g.members.front())];
        g.mode_class = c0;
        for (int i : g.members) {
            const ModeClass c = traj.mode_class[static_cast<std::size_t>(i)];
            if (c != c0) g.mode_class = ModeClass::mixed;
        }
        if (c0 == ModeClass::integrator) {
            // Numerically split zero eigenvalues may come out as tiny conjugate pairs.
            g.kind = GroupKind::real;
            g.dimension = static_cast<int>(g.members.size());
            continue;
        }
        bool paired = all_complex;
        for (int i : g.members) {
            const int p = traj.partner[static_cast<std::size_t>(i)];
            if (p < 0 || traj.group[static_cast<std::size_t>(p)] != traj.group[static_cast<std::size_t>(i)]) paired = false;
        }
        if (all_real) {
            g.kind = GroupKind::real;
            g.dimension = static_cast<int>(g.members.size());
        } else if (paired) {
            g.kind = GroupKind::complex;
            for (int i : g.members)
                if (traj.values[0](i).imag() > 0.0) g.canonical.push_back(i);
            g.dimension = static_cast<int>(g.canonical.size());
        } else {
            g.kind = GroupKind::transition;
            g.dimension = static_cast<int>(g.members.size());
        }
    }
    return groups;
}

std::string trajectories_csv(const ModeTrajectorySet& traj)
{
    std::ostringstream out;
    out.precision(17);
    out << "k,rho,traj_index,re_lambda,im_lambda,stability_label\n";
    for (std::size_t k = 0; k < traj.grid_size(); ++k)
        for (int i = 0; i < traj.size(); ++i)
            out << k << ',' << traj.rho[k] << ',' << i << ',' << traj.values[k](i).real() << ','
                << traj.values[k](i).imag() << ',' << to_string(traj.mode_class[static_cast<std::size_t>(i)]) << '\n';
    return out.str();
}

} // namespace lpvmor
