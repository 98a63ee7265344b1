#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace crowdtrack {

/// Minimum-cost assignment of every row to a distinct column (rows <= cols).
/// Entries equal to +infinity are forbidden. Returns row -> column, or nullopt
/// when no assignment avoids forbidden entries.
[[nodiscard]] std::optional<std::vector<int>> solve_min_assignment(const Eigen::MatrixXd& cost);

/// Distance-gated one-to-one matching: pairs with distance > gate never match.
/// Returns row -> column or -1. Minimises the total matched distance plus
/// `gate` per unmatched row and per unmatched column.
[[nodiscard]] std::vector<int> gated_matching(const Eigen::MatrixXd& distance, double gate);

}  // namespace crowdtrack
