#include "lpvmor/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lpvmor {
namespace {

struct Potentials {
    std::vector<double> u, v;   // row / column potentials, 1-based
    std::vector<int> row_of_col; // 1-based, 0 = free
};

// Shortest augmenting path Hungarian algorithm. Keeps dual potentials with
// cost(i,j) - u_i - v_j >= 0 and equality on the matched edges.
Potentials hungarian(const Mat& a)
{
    const int n = static_cast<int>(a.rows());
    const double inf = std::numeric_limits<double>::infinity();
    Potentials p;
    p.u.assign(n + 1, 0.0);
    p.v.assign(n + 1, 0.0);
    p.row_of_col.assign(n + 1, 0);
    std::vector<int> way(n + 1, 0);
    std::vector<double> minv(n + 1);
    std::vector<char> used(n + 1);
    for (int i = 1; i <= n; ++i) {
        p.row_of_col[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p.row_of_col[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = a(i0 - 1, j - 1) - p.u[i0] - p.v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    p.u[p.row_of_col[j]] += delta;
                    p.v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p.row_of_col[j0] != 0);
        do {
            const int j1 = way[j0];
            p.row_of_col[j0] = p.row_of_col[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    return p;
}

// Bipartite matching on the tight-edge graph restricted to rows >= first_row
// and columns not yet taken.
class TightGraph {
public:
    explicit TightGraph(std::vector<std::vector<int>> adj) : adj_(std::move(adj)) {}

    const std::vector<int>& neighbours(int row) const { return adj_[static_cast<std::size_t>(row)]; }

    bool can_complete(int first_row, const std::vector<char>& col_taken)
    {
        const int n = static_cast<int>(adj_.size());
        match_.assign(static_cast<std::size_t>(n), -1);
        for (int r = first_row; r < n; ++r) {
            visited_.assign(static_cast<std::size_t>(n), 0);
            if (!augment(r, col_taken)) return false;
        }
        return true;
    }

private:
    bool augment(int r, const std::vector<char>& col_taken)
    {
        for (int c : adj_[static_cast<std::size_t>(r)]) {
            if (col_taken[static_cast<std::size_t>(c)] || visited_[static_cast<std::size_t>(c)]) continue;
            visited_[static_cast<std::size_t>(c)] = 1;
            const int owner = match_[static_cast<std::size_t>(c)];
            if (owner < 0 || augment(owner, col_taken)) {
                match_[static_cast<std::size_t>(c)] = r;
                return true;
            }
        }
        return false;
    }

    std::vector<std::vector<int>> adj_;
    std::vector<int> match_;
    std::vector<char> visited_;
};

} // namespace

double assignment_cost(const Mat& cost, const std::vector<int>& perm)
{
    double s = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) s += cost(static_cast<Eigen::Index>(i), perm[i]);
    return s;
}

Assignment solve_assignment(const Mat& cost, double tie_tol)
{
    if (cost.rows() != cost.cols()) throw Error("solve_assignment: cost matrix must be square");
    if (!cost.allFinite()) throw Error("solve_assignment: non-finite cost");
    const int n = static_cast<int>(cost.rows());
    Assignment out;
    if (n == 0) return out;

    const Potentials pot = hungarian(cost);
    std::vector<int> hung(static_cast<std::size_t>(n));
    for (int j = 1; j <= n; ++j) hung[static_cast<std::size_t>(pot.row_of_col[j] - 1)] = j - 1;

    const double tol = tie_tol * (1.0 + cost.cwiseAbs().maxCoeff());
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double reduced = cost(i, j) - pot.u[i + 1] - pot.v[j + 1];
            if (reduced <= tol || j == hung[static_cast<std::size_t>(i)]) adj[static_cast<std::size_t>(i)].push_back(j);
        }
    }
    TightGraph graph(std::move(adj));
    std::vector<char> taken(static_cast<std::size_t>(n), 0);
    out.col_of_row.assign(static_cast<std::size_t>(n), -1);
    for (int i = 0; i < n; ++i) {
        bool placed = false;
        for (int j : graph.neighbours(i)) {
            if (taken[static_cast<std::size_t>(j)]) continue;
            taken[static_cast<std::size_t>(j)] = 1;
            if (graph.can_complete(i + 1, taken)) {
                out.col_of_row[static_cast<std::size_t>(i)] = j;
                placed = true;
                break;
            }
            taken[static_cast<std::size_t>(j)] = 0;
        }
        if (!placed) {
            // Cannot happen with exact duals; fall back to the Hungarian matching.
            out.col_of_row = hung;
            break;
        }
    }
    out.cost = assignment_cost(cost, out.col_of_row);
    const double hcost = assignment_cost(cost, hung);
    if (hcost < out.cost - tol) {
        out.col_of_row = hung;
        out.cost = hcost;
    }
    return out;
}

Assignment second_best_assignment(const Mat& cost, const Assignment& best)
{
    Assignment out;
    out.cost = std::numeric_limits<double>::infinity();
    const Eigen::Index n = cost.rows();
    if (n < 2) return out;
    const double big = 1e6 * (1.0 + cost.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < n; ++i) {
        Mat c = cost;
        c(i, best.col_of_row[static_cast<std::size_t>(i)]) = big;
        Assignment a = solve_assignment(c);
        if (a.col_of_row == best.col_of_row) continue;
        a.cost = assignment_cost(cost, a.col_of_row);
        if (a.cost < out.cost) out = std::move(a);
    }
    return out;
}

} // namespace lpvmor
