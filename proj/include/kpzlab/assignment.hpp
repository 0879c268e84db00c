#ifndef KPZLAB_ASSIGNMENT_HPP
#define KPZLAB_ASSIGNMENT_HPP

#include <span>
#include <vector>

namespace kpzlab {

// Dense linear assignment by the Jonker-Volgenant shortest augmenting path
// algorithm (Computing 38, 1987). cost is n x n row-major; returns the
// optimal total cost and fills rowsol with the column assigned to each row.
double solve_assignment(int n, std::span<const double> cost, std::vector<int>& rowsol);

} // namespace kpzlab

#endif
