#include <algorithm>
#include <numeric>

#include "helpers.hpp"
#include "lpvmor/assignment.hpp"

using namespace lpvmor;
using namespace testutil;

namespace {

double brute_force(const Mat& c, std::vector<int>* best_perm = nullptr)
{
    std::vector<int> p(static_cast<std::size_t>(c.rows()));
    std::iota(p.begin(), p.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        const double s = assignment_cost(c, p);
        if (s < best) {
            best = s;
            if (best_perm) *best_perm = p;
        }
    } while (std::next_permutation(p.begin(), p.end()));
    return best;
}

} // namespace

TEST_CASE("two by two example")
{
    Mat c(2, 2);
    c << 0.1, 0.9, 0.8, 0.2;
    const Assignment a = solve_assignment(c);
    CHECK(a.col_of_row == std::vector<int>{0, 1});
    CHECK(std::abs(a.cost - 0.3) < 1e-15);
}

TEST_CASE("matches brute force on random matrices")
{
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> size(1, 7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = size(rng);
        Mat c(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) c(i, j) = u(rng);
        std::vector<int> bp;
        const double best = brute_force(c, &bp);
        const Assignment a = solve_assignment(c);
        CHECK(a.cost == assignment_cost(c, a.col_of_row));
        CHECK(a.cost == best);
        CHECK(a.col_of_row == bp);
    }
}

TEST_CASE("ties resolve to the lexicographically smallest permutation")
{
    const Assignment a = solve_assignment(Mat::Ones(4, 4));
    CHECK(a.col_of_row == std::vector<int>{0, 1, 2, 3});
    Mat c = Mat::Ones(3, 3);
    c(0, 2) = c(1, 1) = c(2, 0) = 0.0;
    c(0, 1) = c(1, 0) = 0.0;
    c(2, 2) = 0.0;
    // {0->1, 1->0, 2->2} and {0->2, 1->1, 2->0} both cost 0
    CHECK(solve_assignment(c).col_of_row == std::vector<int>{1, 0, 2});
}

TEST_CASE("second best differs in at least one edge")
{
    std::mt19937_64 rng(22);
    const Mat c = random_matrix(rng, 5, 5).cwiseAbs();
    const Assignment a = solve_assignment(c);
    const Assignment b = second_best_assignment(c, a);
    CHECK(b.col_of_row != a.col_of_row);
    CHECK(b.cost >= a.cost);
    // exhaustive second best
    std::vector<int> p(5);
    std::iota(p.begin(), p.end(), 0);
    double second = std::numeric_limits<double>::infinity();
    do
        if (p != a.col_of_row) second = std::min(second, assignment_cost(c, p));
    while (std::next_permutation(p.begin(), p.end()));
    CHECK(std::abs(b.cost - second) < 1e-12);
    CHECK(std::isinf(second_best_assignment(Mat::Ones(1, 1), solve_assignment(Mat::Ones(1, 1))).cost));
}
