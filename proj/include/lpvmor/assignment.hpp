#pragma once

#include <vector>

#include "lpvmor/common.hpp"

namespace lpvmor {

/// Perfect matching of rows to columns of a square cost matrix.
struct Assignment {
    std::vector<int> col_of_row;
    double cost = 0.0;
};

/// Sum of cost(i, perm[i]) in ascending row order.
double assignment_cost(const Mat& cost, const std::vector<int>& perm);

/// Minimum-cost perfect matching (Hungarian method, O(n^3)). Among optimal
/// matchings whose costs agree within tie_tol (relative to the largest entry)
/// the lexicographically smallest permutation is returned.
Assignment solve_assignment(const Mat& cost, double tie_tol = 1e-12);

/// Cheapest perfect matching that differs from `best` in at least one edge.
/// Returns cost = +inf for n < 2.
Assignment second_best_assignment(const Mat& cost, const Assignment& best);

} // namespace lpvmor
