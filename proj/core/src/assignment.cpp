#include "crowdtrack/assignment.hpp"

#include "crowdtrack/error.hpp"

#include <cmath>
#include <limits>

namespace crowdtrack {

// Shortest augmenting path with row/column potentials (Kuhn-Munkres, O(n^2 m)).
std::optional<std::vector<int>> solve_min_assignment(const Eigen::MatrixXd& cost) {
    const auto n = static_cast<int>(cost.rows());
    const auto m = static_cast<int>(cost.cols());
    if (n > m) {
        throw Error(ErrorKind::DimensionMismatch, "assignment needs rows <= cols");
    }
    if (n == 0) {
        return std::vector<int>{};
    }
    constexpr double inf = std::numeric_limits<double>::infinity();
    // 1-based arrays; index 0 is the virtual source column.
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(m) + 1, 0.0);
    std::vector<int> p(static_cast<std::size_t>(m) + 1, 0);
    std::vector<int> way(static_cast<std::size_t>(m) + 1, 0);
    std::vector<double> minv(static_cast<std::size_t>(m) + 1);
    std::vector<char> used(static_cast<std::size_t>(m) + 1);

    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = p[static_cast<std::size_t>(j0)];
            double delta = inf;
            int j1 = -1;
            for (int j = 1; j <= m; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    continue;
                }
                const double c = cost(i0 - 1, j - 1);
                if (c != inf) {
                    const double cur = c - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                    if (cur < minv[static_cast<std::size_t>(j)]) {
                        minv[static_cast<std::size_t>(j)] = cur;
                        way[static_cast<std::size_t>(j)] = j0;
                    }
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            if (j1 < 0 || delta == inf) {
                return std::nullopt;
            }
            for (int j = 0; j <= m; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else if (minv[static_cast<std::size_t>(j)] != inf) {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= m; ++j) {
        if (p[static_cast<std::size_t>(j)] != 0) {
            row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
        }
    }
    return row_to_col;
}

std::vector<int> gated_matching(const Eigen::MatrixXd& distance, double gate) {
    const auto rows = distance.rows();
    const auto cols = distance.cols();
    std::vector<int> result(static_cast<std::size_t>(rows), -1);
    if (rows == 0 || cols == 0) {
        return result;
    }
    constexpr double inf = std::numeric_limits<double>::infinity();
    // Rows: real rows then one "unmatched" row per column; columns: real
    // columns then one "unmatched" column per row.
    const auto n = rows + cols;
    Eigen::MatrixXd ext = Eigen::MatrixXd::Constant(n, n, inf);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            if (distance(r, c) <= gate) {
                ext(r, c) = distance(r, c);
            }
        }
        ext(r, cols + r) = gate;
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
        ext(rows + c, c) = gate;
        for (Eigen::Index r = 0; r < rows; ++r) {
            ext(rows + c, cols + r) = 0.0;
        }
    }
    const auto sol = solve_min_assignment(ext);
    if (!sol) {
        return result;
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
        const int c = (*sol)[static_cast<std::size_t>(r)];
        if (c >= 0 && c < cols) {
            result[static_cast<std::size_t>(r)] = c;
        }
    }
    return result;
}

}  // namespace crowdtrack
