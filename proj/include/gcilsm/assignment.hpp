#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "gcilsm/label.hpp"

namespace gcilsm {

/// Divergence costs between two label spaces plus the price Gamma_m charged for
/// each label (row or column) left unassigned. Entries may be +inf.
struct CostMatrix {
  std::vector<Label> rows;
  std::vector<Label> cols;
  Eigen::MatrixXd entries;
  double non_assignment_cost = 0.0;
};

/// A (partial) one-to-one assignment. row_to_col[i] is the column matched to
/// row i, or -1 when row i is unassigned.
struct Assignment {
  std::vector<int> row_to_col;
  double cost = 0.0;

  [[nodiscard]] int matches() const;
  friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// Minimum-cost assignment of every row of `cost` (rows <= cols) to a distinct
/// column. +inf entries are forbidden. Returns nullopt when no finite
/// assignment exists. Shortest-augmenting-path Hungarian method, O(n^2 m).
std::optional<Assignment> solve_assignment(const Eigen::MatrixXd& cost);

/// The k cheapest complete row assignments of `cost` (rows <= cols) in
/// nondecreasing cost, via Murty's partitioning. Fewer are returned when fewer
/// finite assignments exist.
std::vector<Assignment> kbest_assignments(const Eigen::MatrixXd& cost, int k);

/// Ranked assignment with non-assignment: up to k distinct partial assignments
/// in nondecreasing total cost, where every unassigned row and every
/// unassigned column costs non_assignment_cost. Equal-cost solutions are
/// ordered by fewer matched pairs first, so a pair whose cost equals the price
/// of leaving both ends unassigned is left unmatched. With an infinite
/// non-assignment cost only complete square assignments are finite.
/// Throws DomainError when k <= 0.
std::vector<Assignment> murty_kbest(const CostMatrix& c, int k);

}  // namespace gcilsm
