#include <map>

#include "helpers.hpp"
#include "lpvmor/assignment.hpp"
#include "lpvmor/benchmark.hpp"

using namespace lpvmor;
using namespace testutil;

namespace {

BenchmarkSpec empty_spec()
{
    BenchmarkSpec s;
    s.real = s.complex_pairs = s.constant_real = s.constant_complex_pairs = 0;
    s.repeated_real = s.repeated_complex_pairs = s.integrators = s.mixed = s.unstable = s.transitions = 0;
    return s;
}

// Max over trajectories of |eig - truth| after an optimal matching at grid point k.
double eig_mismatch(const Mat& a, const CVec& truth)
{
    const Eigen::VectorXcd e = Eigen::EigenSolver<Mat>(a).eigenvalues();
    const Eigen::Index n = e.size();
    Mat cost(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) cost(i, j) = std::abs(truth(i) - e(j));
    const Assignment as = solve_assignment(cost);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) worst = std::max(worst, cost(i, as.col_of_row[static_cast<std::size_t>(i)]));
    return worst;
}

} // namespace

TEST_CASE("spec validation and JSON round trip")
{
    BenchmarkSpec s;
    CHECK(s.family_states() == 80);
    validate(s);
    const BenchmarkSpec r = spec_from_json(spec_to_json(s));
    CHECK(spec_to_json(r) == spec_to_json(s));
    s.real += 1;
    CHECK_THROWS_AS(validate(s), Error);
    BenchmarkSpec d;
    d.degree = d.n0;
    CHECK_THROWS_AS(validate(d), Error);
    CHECK_THROWS_AS(spec_from_json(json{{"no_such_key", 1}}), Error);
    CHECK_FALSE(family_catalog().empty());
}

TEST_CASE("constant stable family: eigenvalues follow the prescription")
{
    BenchmarkSpec s = empty_spec();
    s.constant_real = 3;
    s.constant_complex_pairs = 1;
    s.n_x = 5;
    s.n = 20;
    s.n0 = 30;
    s.degree = 8;
    const auto [m, truth] = generate_benchmark(s);
    CHECK(m.size() == 20);
    CHECK(truth.rho0.size() == 30);
    for (std::size_t k = 1; k < truth.values.size(); ++k) CHECK(truth.values[k] == truth.values[0]);
    for (std::size_t k = 0; k < m.size(); ++k) {
        const double mis = eig_mismatch(m.points[k].A, truth.values[k]);
        CHECK(mis <= 1e-6);
        CHECK(mis <= *std::max_element(truth.drift.begin(), truth.drift.end()) + 1e-12);
    }
}

TEST_CASE("same seed, same model")
{
    BenchmarkSpec s = empty_spec();
    s.real = 4;
    s.complex_pairs = 2;
    s.integrators = 1;
    s.mixed = 1;
    s.n_x = 10;
    s.n = 25;
    s.n0 = 30;
    s.degree = 8;
    s.seed = 7;
    const auto a = generate_benchmark(s), b = generate_benchmark(s);
    for (std::size_t k = 0; k < a.first.size(); ++k) {
        CHECK(a.first.points[k].A == b.first.points[k].A);
        CHECK(a.first.points[k].B == b.first.points[k].B);
        CHECK(a.first.points[k].C == b.first.points[k].C);
        CHECK(a.first.points[k].D == b.first.points[k].D);
    }
    s.seed = 8;
    const auto c = generate_benchmark(s);
    CHECK(c.first.points[0].A != a.first.points[0].A);
}

TEST_CASE("default benchmark exhibits every family")
{
    const auto [m, truth] = generate_benchmark(BenchmarkSpec{});
    CHECK(m.n_x == 80);
    CHECK(m.n_u == 2);
    CHECK(m.n_y == 2);
    CHECK(m.size() == 100);
    std::map<std::string, int> census;
    for (const auto& l : truth.labels) ++census[l];
    CHECK(census["real"] == 19);
    CHECK(census["complex"] == 40);
    CHECK(census["constant"] == 10);
    CHECK(census["repeated"] == 4);
    CHECK(census["integrator"] == 2);
    CHECK(census["mixed"] == 2);
    CHECK(census["unstable"] == 1);
    CHECK(census["transition"] == 2);

    // Pole map from the output model versus ground truth.
    for (std::size_t k = 0; k < m.size(); k += 11) {
        const double mis = eig_mismatch(m.points[k].A, truth.values[k]);
        CHECK(mis <= *std::max_element(truth.drift.begin(), truth.drift.end()) + 1e-9);
        const Eigen::VectorXcd e = Eigen::EigenSolver<Mat>(m.points[k].A).eigenvalues();
        int zeros = 0;
        for (Eigen::Index i = 0; i < e.size(); ++i) zeros += std::abs(e(i)) < 1e-8;
        CHECK(zeros == 2);
    }
    for (std::size_t i = 0; i < truth.labels.size(); ++i) {
        if (truth.labels[i] != "mixed") continue;
        const double first = truth.values.front()(static_cast<Eigen::Index>(i)).real();
        const double last = truth.values.back()(static_cast<Eigen::Index>(i)).real();
        CHECK(first * last < 0.0);
    }
    for (std::size_t i = 0; i < truth.labels.size(); ++i)
        if (truth.labels[i] == "integrator") CHECK(truth.drift[i] <= 1e-9);
}

TEST_CASE("crossing template changes sign at the prescribed point")
{
    BenchmarkSpec s = empty_spec();
    s.mixed = 1;
    s.real = 1;
    s.n_x = 2;
    s.n = 21;
    s.n0 = 25;
    s.degree = 6;
    const auto [m, truth] = generate_benchmark(s);
    const Eigen::Index i = truth.labels[0] == "mixed" ? 0 : 1;
    int changes = 0;
    for (std::size_t k = 1; k < truth.values.size(); ++k)
        changes += (truth.values[k - 1](i).real() < 0.0) != (truth.values[k](i).real() < 0.0);
    CHECK(changes == 1);
}
