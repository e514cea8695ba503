#include "lpvmor/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "lpvmor/assignment.hpp"
#include "lpvmor/linalg.hpp"

namespace lpvmor {
namespace {

constexpr double pi = 3.14159265358979323846;
constexpr int max_attempts = 20;

// One diagonal block of A0 and its eigenvalues, both as functions of the
// normalized parameter t in [0, 1].
struct Block {
    int size = 1;
    std::function<Mat(double)> a;
    std::function<std::vector<cplx>(double)> lambda;
    std::string label;
    double crossing = -1.0; // t where Re lambda = 0, for the mixed family
};

struct Cohort {
    double decay = 1.0;
    double freq = 1.0;
};

class Draw {
public:
    explicit Draw(std::uint64_t seed) : rng_(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
    int index(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
    Mat gaussian(Eigen::Index r, Eigen::Index c)
    {
        Mat m(r, c);
        for (Eigen::Index j = 0; j < c; ++j)
            for (Eigen::Index i = 0; i < r; ++i) m(i, j) = normal();
        return m;
    }

private:
    std::mt19937_64 rng_;
};

Block real_block(double a, double b, std::string label)
{
    Block blk;
    blk.a = [=](double t) { return Mat::Constant(1, 1, -a - b * t); };
    blk.lambda = [=](double t) { return std::vector<cplx>{cplx(-a - b * t, 0.0)}; };
    blk.label = std::move(label);
    return blk;
}

Block complex_block(double a, double b, double c, double e, std::string label)
{
    Block blk;
    blk.size = 2;
    blk.a = [=](double t) {
        const double s = -a - b * t, w = c + e * t;
        Mat m(2, 2);
        m << s, w, -w, s;
        return m;
    };
    blk.lambda = [=](double t) {
        const double s = -a - b * t, w = c + e * t;
        return std::vector<cplx>{cplx(s, w), cplx(s, -w)};
    };
    blk.label = std::move(label);
    return blk;
}

std::vector<Block> draw_families(const BenchmarkSpec& spec, Draw& d)
{
    std::vector<Cohort> cohorts(static_cast<std::size_t>(std::max(spec.cohorts, 1)));
    for (auto& c : cohorts) {
        c.decay = d.log_uniform(0.1, 10.0);
        c.freq = d.log_uniform(0.1, 20.0);
    }
    auto cohort = [&]() -> const Cohort& { return cohorts[static_cast<std::size_t>(d.index(static_cast<int>(cohorts.size())))]; };
    auto member_real = [&](const Cohort& c, double& a, double& b) {
        a = c.decay * d.uniform(0.85, 1.15);
        b = a * d.uniform(-0.3, 0.3);
    };
    auto member_complex = [&](const Cohort& c, double& a, double& b, double& w, double& e) {
        member_real(c, a, b);
        w = c.freq * d.uniform(0.85, 1.15);
        e = w * d.uniform(-0.3, 0.3);
    };

    std::vector<Block> out;
    double a, b, w, e;
    for (int i = 0; i < spec.real; ++i) {
        member_real(cohort(), a, b);
        out.push_back(real_block(a, b, "real"));
    }
    for (int i = 0; i < spec.complex_pairs; ++i) {
        member_complex(cohort(), a, b, w, e);
        out.push_back(complex_block(a, b, w, e, "complex"));
    }
    for (int i = 0; i < spec.constant_real; ++i) {
        member_real(cohort(), a, b);
        out.push_back(real_block(a, 0.0, "constant"));
    }
    for (int i = 0; i < spec.constant_complex_pairs; ++i) {
        member_complex(cohort(), a, b, w, e);
        out.push_back(complex_block(a, 0.0, w, 0.0, "constant"));
    }
    for (int i = 0; i < spec.repeated_real; ++i) {
        member_real(cohort(), a, b);
        out.push_back(real_block(a, b, "repeated"));
        out.push_back(real_block(a, b, "repeated"));
    }
    for (int i = 0; i < spec.repeated_complex_pairs; ++i) {
        member_complex(cohort(), a, b, w, e);
        out.push_back(complex_block(a, b, w, e, "repeated"));
        out.push_back(complex_block(a, b, w, e, "repeated"));
    }
    for (int i = 0; i < spec.integrators; ++i) out.push_back(real_block(0.0, 0.0, "integrator"));
    for (int i = 0; i < spec.mixed; ++i) {
        const double slope = d.uniform(0.2, 1.0), cross = d.uniform(0.2, 0.8);
        Block blk = real_block(slope * cross, -slope, "mixed"); // lambda = slope (t - cross)
        blk.crossing = cross;
        out.push_back(std::move(blk));
    }
    for (int i = 0; i < spec.unstable; ++i) {
        a = d.uniform(0.05, 0.3);
        b = a * d.uniform(0.0, 0.5);
        out.push_back(real_block(-a, -b, "unstable"));
    }
    for (int i = 0; i < spec.transitions; ++i) {
        member_real(cohort(), a, b);
        const double eps = spec.transition_split;
        Block blk;
        blk.size = 2;
        blk.a = [=](double t) {
            Mat m(2, 2);
            m << -a, eps, eps * std::cos(6.0 * pi * t), -a;
            return m;
        };
        blk.lambda = [=](double t) {
            const cplx r = eps * std::sqrt(cplx(std::cos(6.0 * pi * t), 0.0));
            return std::vector<cplx>{cplx(-a, 0.0) + r, cplx(-a, 0.0) - r};
        };
        blk.label = "transition";
        out.push_back(std::move(blk));
    }
    return out;
}

Mat chebyshev_basis(const std::vector<double>& t, int degree)
{
    Mat v(static_cast<Eigen::Index>(t.size()), degree + 1);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double x = 2.0 * t[i] - 1.0;
        const auto r = static_cast<Eigen::Index>(i);
        v(r, 0) = 1.0;
        if (degree >= 1) v(r, 1) = x;
        for (int j = 2; j <= degree; ++j) v(r, j) = 2.0 * x * v(r, j - 1) - v(r, j - 2);
    }
    return v;
}

std::vector<double> linspace(double lo, double hi, int n)
{
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
    g.back() = hi;
    return g;
}

CVec truth_values(const std::vector<Block>& blocks, double t)
{
    std::vector<cplx> v;
    for (const auto& b : blocks) {
        const auto l = b.lambda(t);
        v.insert(v.end(), l.begin(), l.end());
    }
    return Eigen::Map<const CVec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void check_range(int v, int lo, const char* name)
{
    if (v < lo) throw Error(std::string("benchmark spec: ") + name + " must be >= " + std::to_string(lo), "benchmark");
}

} // namespace

int BenchmarkSpec::family_states() const
{
    return real + 2 * complex_pairs + constant_real + 2 * constant_complex_pairs + 2 * repeated_real +
           4 * repeated_complex_pairs + integrators + mixed + unstable + 2 * transitions;
}

void validate(const BenchmarkSpec& spec)
{
    check_range(spec.n_x, 1, "n_x");
    check_range(spec.n_u, 1, "n_u");
    check_range(spec.n_y, 1, "n_y");
    check_range(spec.n0, 2, "n0");
    check_range(spec.n, 2, "n");
    check_range(spec.degree, 0, "degree");
    check_range(spec.cohorts, 1, "cohorts");
    if (!(spec.gain_decades >= 0.0)) throw Error("benchmark spec: gain_decades must be nonnegative", "benchmark");
    for (int c : {spec.real, spec.complex_pairs, spec.constant_real, spec.constant_complex_pairs, spec.repeated_real,
                  spec.repeated_complex_pairs, spec.integrators, spec.mixed, spec.unstable, spec.transitions})
        check_range(c, 0, "family count");
    if (spec.degree >= spec.n0) throw Error("benchmark spec: degree must be below n0", "benchmark");
    if (!(spec.rho_max > spec.rho_min)) throw Error("benchmark spec: rho_max must exceed rho_min", "benchmark");
    if (!(spec.rate_bound >= 0.0)) throw Error("benchmark spec: rate_bound must be nonnegative", "benchmark");
    if (spec.family_states() != spec.n_x)
        throw Error("benchmark spec: families give " + std::to_string(spec.family_states()) + " states, n_x is " +
                        std::to_string(spec.n_x),
                    "benchmark");
}

BenchmarkSpec spec_from_json(const json& j)
{
    BenchmarkSpec s;
    if (!j.is_object()) throw Error("benchmark spec must be a JSON object", "benchmark");
    static const std::set<std::string> ints = {"n_x", "n_u", "n_y", "n0", "n", "degree", "cohorts", "real",
                                               "complex_pairs", "constant_real", "constant_complex_pairs",
                                               "repeated_real", "repeated_complex_pairs", "integrators", "mixed",
                                               "unstable", "transitions"};
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "rho_min") s.rho_min = value.get<double>();
            else if (key == "rho_max") s.rho_max = value.get<double>();
            else if (key == "rate_bound") s.rate_bound = value.get<double>();
            else if (key == "transition_split") s.transition_split = value.get<double>();
            else if (key == "gain_decades") s.gain_decades = value.get<double>();
            else if (key == "seed") s.seed = value.get<std::uint64_t>();
            else if (ints.count(key)) {
                const int v = value.get<int>();
                if (key == "n_x") s.n_x = v;
                else if (key == "n_u") s.n_u = v;
                else if (key == "n_y") s.n_y = v;
                else if (key == "n0") s.n0 = v;
                else if (key == "n") s.n = v;
                else if (key == "degree") s.degree = v;
                else if (key == "cohorts") s.cohorts = v;
                else if (key == "real") s.real = v;
                else if (key == "complex_pairs") s.complex_pairs = v;
                else if (key == "constant_real") s.constant_real = v;
                else if (key == "constant_complex_pairs") s.constant_complex_pairs = v;
                else if (key == "repeated_real") s.repeated_real = v;
                else if (key == "repeated_complex_pairs") s.repeated_complex_pairs = v;
                else if (key == "integrators") s.integrators = v;
                else if (key == "mixed") s.mixed = v;
                else if (key == "unstable") s.unstable = v;
                else s.transitions = v;
            } else
                throw Error("benchmark spec: unknown key '" + key + "'", "benchmark");
        } catch (const json::exception& e) {
            throw Error("benchmark spec: bad value for '" + key + "': " + e.what(), "benchmark");
        }
    }
    return s;
}

json spec_to_json(const BenchmarkSpec& s)
{
    return json{{"n_x", s.n_x},
                {"n_u", s.n_u},
                {"n_y", s.n_y},
                {"rho_min", s.rho_min},
                {"rho_max", s.rho_max},
                {"n0", s.n0},
                {"n", s.n},
                {"degree", s.degree},
                {"rate_bound", s.rate_bound},
                {"cohorts", s.cohorts},
                {"gain_decades", s.gain_decades},
                {"real", s.real},
                {"complex_pairs", s.complex_pairs},
                {"constant_real", s.constant_real},
                {"constant_complex_pairs", s.constant_complex_pairs},
                {"repeated_real", s.repeated_real},
                {"repeated_complex_pairs", s.repeated_complex_pairs},
                {"integrators", s.integrators},
                {"mixed", s.mixed},
                {"unstable", s.unstable},
                {"transitions", s.transitions},
                {"transition_split", s.transition_split},
                {"seed", s.seed}};
}

json truth_to_json(const GroundTruth& t)
{
    auto values = [](const std::vector<CVec>& v) {
        json rows = json::array();
        for (const auto& x : v) {
            json re = json::array(), im = json::array();
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                re.push_back(x(i).real());
                im.push_back(x(i).imag());
            }
            rows.push_back(json{{"re", re}, {"im", im}});
        }
        return rows;
    };
    return json{{"labels", t.labels}, {"rho0", t.rho0},     {"rho", t.rho},
                {"values0", values(t.values0)}, {"values", values(t.values)}, {"drift", t.drift},
                {"T0", matrix_to_json(t.T0)},    {"T1", matrix_to_json(t.T1)}, {"attempts", t.attempts}};
}

std::pair<GridLpvModel, GroundTruth> generate_benchmark(const BenchmarkSpec& spec)
{
    validate(spec);
    Draw d(spec.seed);
    const Eigen::Index n = spec.n_x;
    const double span = spec.rho_max - spec.rho_min;
    const std::vector<double> t0 = linspace(0.0, 1.0, spec.n0), t1 = linspace(0.0, 1.0, spec.n);
    std::vector<double> rho0(t0.size()), rho(t1.size());
    for (std::size_t i = 0; i < t0.size(); ++i) rho0[i] = spec.rho_min + span * t0[i];
    for (std::size_t i = 0; i < t1.size(); ++i) rho[i] = spec.rho_min + span * t1[i];
    rho0.back() = spec.rho_max;
    rho.back() = spec.rho_max;

    std::string last_reason;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        const std::vector<Block> blocks = draw_families(spec, d);
        Mat b0 = d.gaussian(n, spec.n_u);
        Mat c0 = d.gaussian(spec.n_y, n);
        for (Eigen::Index off = 0; const Block& blk : blocks) {
            const double g = std::pow(10.0, -0.5 * spec.gain_decades * d.uniform(0.0, 1.0));
            b0.middleRows(off, blk.size) *= g;
            c0.middleCols(off, blk.size) *= g;
            off += blk.size;
        }
        const Mat d0 = 0.1 * d.gaussian(spec.n_y, spec.n_u);

        // T(t) = T0 + t T1 with T1 nonzero on about a quarter of the 2x2 diagonal blocks.
        const Eigen::HouseholderQR<Mat> qr(d.gaussian(n, n));
        Vec scale(n);
        for (Eigen::Index i = 0; i < n; ++i) scale(i) = std::exp(d.uniform(-1.0, 1.0));
        const Mat tbase = Mat(qr.householderQ()) * scale.asDiagonal();
        Mat tvar = Mat::Zero(n, n);
        for (Eigen::Index i = 0; i + 1 < n; i += 2)
            if (d.uniform(0.0, 1.0) < 0.25)
                for (Eigen::Index r = 0; r < 2; ++r)
                    for (Eigen::Index c = 0; c < 2; ++c) tvar(i + r, i + c) = d.uniform(-0.5, 0.5);
        bool conditioned = false;
        for (int halving = 0; halving < 10 && !conditioned; ++halving) {
            conditioned = true;
            for (double t : t0)
                if (condition_number(Mat(tbase + t * tvar)) > 1e4) {
                    conditioned = false;
                    tvar *= 0.5;
                    break;
                }
        }
        if (!conditioned) {
            last_reason = "T(rho) badly conditioned";
            continue;
        }

        // Samples on the fitting grid, then an entrywise polynomial fit.
        const Eigen::Index entries = n * n + n * spec.n_u + spec.n_y * n + spec.n_y * spec.n_u;
        Mat y(static_cast<Eigen::Index>(t0.size()), entries);
        for (std::size_t i = 0; i < t0.size(); ++i) {
            Mat a0 = Mat::Zero(n, n);
            Eigen::Index off = 0;
            for (const auto& blk : blocks) {
                a0.block(off, off, blk.size, blk.size) = blk.a(t0[i]);
                off += blk.size;
            }
            const Mat t = tbase + t0[i] * tvar;
            const Eigen::PartialPivLU<Mat> lu(t);
            const Mat a = lu.solve(a0 * t), b = lu.solve(b0), c = c0 * t;
            Eigen::Index col = 0;
            for (const Mat* m : {&a, &b, &c, &d0}) {
                y.row(static_cast<Eigen::Index>(i)).segment(col, m->size()) = Eigen::Map<const Vec>(m->data(), m->size());
                col += m->size();
            }
        }
        const Mat coef = chebyshev_basis(t0, spec.degree).colPivHouseholderQr().solve(y);
        const Mat fitted = chebyshev_basis(t1, spec.degree) * coef;

        GridLpvModel model;
        model.n_x = spec.n_x;
        model.n_u = spec.n_u;
        model.n_y = spec.n_y;
        model.rho_grid = rho;
        model.rate_bound = spec.rate_bound;
        for (std::size_t k = 0; k < t1.size(); ++k) {
            const auto row = fitted.row(static_cast<Eigen::Index>(k));
            Eigen::Index col = 0;
            auto take = [&](Eigen::Index r, Eigen::Index c) {
                Mat m(r, c);
                for (Eigen::Index j = 0; j < c; ++j)
                    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = row(col + j * r + i);
                col += r * c;
                return m;
            };
            GridPoint p;
            p.rho = rho[k];
            p.A = take(n, n);
            p.B = take(n, spec.n_u);
            p.C = take(spec.n_y, n);
            p.D = d0;
            model.points.push_back(std::move(p));
        }

        GroundTruth truth;
        truth.rho0 = rho0;
        truth.rho = rho;
        for (const auto& blk : blocks)
            for (int i = 0; i < blk.size; ++i) truth.labels.push_back(blk.label);
        for (double t : t0) truth.values0.push_back(truth_values(blocks, t));
        for (double t : t1) truth.values.push_back(truth_values(blocks, t));
        truth.T0 = tbase;
        truth.T1 = tvar / span;
        truth.T0 -= spec.rho_min * truth.T1;
        truth.attempts = attempt;

        // Checks: crossings off the grids, diagonalizable, labels preserved.
        bool ok = true;
        for (const auto& blk : blocks)
            if (blk.crossing >= 0.0)
                for (const auto* g : {&t0, &t1})
                    for (double t : *g)
                        if (std::abs(t - blk.crossing) < 1e-6) ok = false;
        if (!ok) {
            last_reason = "crossing too close to a grid point";
            continue;
        }
        truth.drift.assign(static_cast<std::size_t>(n), 0.0);
        std::vector<int> positive(static_cast<std::size_t>(n), 0), negative(static_cast<std::size_t>(n), 0);
        for (std::size_t k = 0; k < t1.size() && ok; ++k) {
            EigenDecomposition ed;
            try {
                ed = eig_decompose(model.points[k].A, 1e10);
            } catch (const Error&) {
                last_reason = "near-defective state matrix";
                ok = false;
                break;
            }
            const CVec& tv = truth.values[k];
            Mat cost(n, n);
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j) cost(i, j) = std::abs(tv(i) - ed.values(j));
            const Assignment as = solve_assignment(cost);
            for (Eigen::Index i = 0; i < n; ++i) {
                const cplx z = ed.values(as.col_of_row[static_cast<std::size_t>(i)]);
                auto& dr = truth.drift[static_cast<std::size_t>(i)];
                dr = std::max(dr, std::abs(z - tv(i)));
                if (z.real() > 0.0) ++positive[static_cast<std::size_t>(i)];
                if (z.real() < 0.0) ++negative[static_cast<std::size_t>(i)];
            }
        }
        if (!ok) continue;
        for (Eigen::Index i = 0; i < n && ok; ++i) {
            const auto u = static_cast<std::size_t>(i);
            const std::string& l = truth.labels[u];
            const auto nk = static_cast<int>(t1.size());
            if (l == "integrator") ok = truth.drift[u] <= 1e-9;
            else if (l == "unstable") ok = positive[u] == nk;
            else if (l == "mixed") ok = positive[u] > 0 && negative[u] > 0;
            else ok = negative[u] == nk;
            if (!ok) last_reason = "deformation changed the " + l + " family of trajectory " + std::to_string(i);
        }
        if (!ok) continue;
        return {std::move(model), std::move(truth)};
    }
    throw Error("benchmark generation failed after " + std::to_string(max_attempts) + " attempts (" + last_reason +
                    "); try another seed",
                "benchmark");
}

std::string family_catalog()
{
    return "t = (rho - rho_min) / (rho_max - rho_min); each family member draws around one of `cohorts` centres\n"
           "(decay a_c log-uniform in [0.1, 10], frequency w_c log-uniform in [0.1, 20]), scaled by U[0.85, 1.15];\n"
           "each block's rows of B0 and columns of C0 are scaled by 10^(-u gain_decades / 2), u in U[0, 1]\n"
           "real:        lambda = -a - b t,                 b = a U[-0.3, 0.3]\n"
           "complex:     lambda = -a - b t +- i (w + e t),  e = w U[-0.3, 0.3]\n"
           "constant:    lambda = -a  or  -a +- i w\n"
           "repeated:    a real or complex member twice, as two identical blocks\n"
           "integrator:  lambda = 0\n"
           "mixed:       lambda = s (t - t*),  s in U[0.2, 1], t* in U[0.2, 0.8]\n"
           "unstable:    lambda = a + b t,     a in U[0.05, 0.3], b = a U[0, 0.5]\n"
           "transition:  block [[-a, eps], [eps cos(6 pi t), -a]], lambda = -a +- eps sqrt(cos(6 pi t))\n";
}

} // namespace lpvmor
