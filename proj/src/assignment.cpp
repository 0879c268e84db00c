#include "kpzlab/assignment.hpp"
#include <cmath>

#include <limits>
#include <stdexcept>

namespace kpzlab {

double solve_assignment(int n, std::span<const double> cost, std::vector<int>& rowsol) {
    if (n <= 0) throw std::invalid_argument("solve_assignment: n must be positive");
    if (cost.size() != static_cast<std::size_t>(n) * n)
        throw std::invalid_argument("solve_assignment: cost matrix size mismatch");
    constexpr double kInf = std::numeric_limits<double>::infinity();
    auto C = [&](int i, int j) { return cost[static_cast<std::size_t>(i) * n + j]; };

    rowsol.assign(n, -1);
    std::vector<int> colsol(n, -1);
    std::vector<double> v(n, 0.0);
    std::vector<int> matches(n, 0);

    // column reduction, reverse order
    for (int j = n - 1; j >= 0; --j) {
        double min = C(0, j);
        int imin = 0;
        for (int i = 1; i < n; ++i)
            if (C(i, j) < min) {
                min = C(i, j);
                imin = i;
            }
        v[j] = min;
        if (++matches[imin] == 1) {
            rowsol[imin] = j;
            colsol[j] = imin;
        } else {
            colsol[j] = -1;
        }
    }

    // reduction transfer
    std::vector<int> free_rows(n);
    int numfree = 0;
    for (int i = 0; i < n; ++i) {
        if (matches[i] == 0) {
            free_rows[numfree++] = i;
        } else if (matches[i] == 1) {
            const int j1 = rowsol[i];
            double min = kInf;
            for (int j = 0; j < n; ++j)
                if (j != j1 && C(i, j) - v[j] < min) min = C(i, j) - v[j];
            v[j1] -= min;
        }
    }

    // Augmenting row reduction, two passes. On geometric cost matrices the
    // reprocessing heuristic can thrash for millions of iterations while
    // barely moving the duals, so each pass is capped; rows past the cap go
    // to the exact augmenting-path phase, which alone guarantees optimality.
    const long iteration_cap = 50L * n;
    long iterations = 0;
    for (int loop = 0; loop < 2; ++loop) {
        int k = 0;
        const int prvnumfree = numfree;
        numfree = 0;
        while (k < prvnumfree) {
            ++iterations;
            const int i = free_rows[k++];
            double umin = C(i, 0) - v[0];
            int j1 = 0;
            double usubmin = kInf;
            int j2 = -1;
            for (int j = 1; j < n; ++j) {
                const double h = C(i, j) - v[j];
                if (h < usubmin) {
                    if (h >= umin) {
                        usubmin = h;
                        j2 = j;
                    } else {
                        usubmin = umin;
                        j2 = j1;
                        umin = h;
                        j1 = j;
                    }
                }
            }
            int i0 = colsol[j1];
            if (umin < usubmin) {
                v[j1] -= usubmin - umin;
            } else if (i0 >= 0) {
                j1 = j2;
                i0 = colsol[j1];
            }
            rowsol[i] = j1;
            colsol[j1] = i;
            if (i0 >= 0) {
                if (umin < usubmin && iterations < iteration_cap)
                    free_rows[--k] = i0;   // reprocess immediately
                else
                    free_rows[numfree++] = i0;
            }
        }
    }

    // shortest augmenting paths for the remaining free rows
    std::vector<double> d(n);
    std::vector<int> pred(n), collist(n);
    for (int f = 0; f < numfree; ++f) {
        const int freerow = free_rows[f];
        for (int j = 0; j < n; ++j) {
            d[j] = C(freerow, j) - v[j];
            pred[j] = freerow;
            collist[j] = j;
        }
        int low = 0, up = 0, last = -1, endofpath = -1;
        double min = 0.0;
        bool unassignedfound = false;
        do {
            if (up == low) {
                last = low - 1;
                min = d[collist[up++]];
                for (int k = up; k < n; ++k) {
                    const int j = collist[k];
                    const double h = d[j];
                    if (h <= min) {
                        if (h < min) {
                            up = low;
                            min = h;
                        }
                        collist[k] = collist[up];
                        collist[up++] = j;
                    }
                }
                for (int k = low; k < up; ++k)
                    if (colsol[collist[k]] < 0) {
                        endofpath = collist[k];
                        unassignedfound = true;
                        break;
                    }
            }
            if (!unassignedfound) {
                const int j1 = collist[low++];
                const int i = colsol[j1];
                const double h = C(i, j1) - v[j1] - min;
                for (int k = up; k < n; ++k) {
                    const int j = collist[k];
                    const double v2 = C(i, j) - v[j] - h;
                    if (v2 < d[j]) {
                        pred[j] = i;
                        if (v2 == min) {
                            if (colsol[j] < 0) {
                                endofpath = j;
                                unassignedfound = true;
                                break;
                            }
                            collist[k] = collist[up];
                            collist[up++] = j;
                        }
                        d[j] = v2;
                    }
                }
            }
        } while (!unassignedfound);

        for (int k = 0; k <= last; ++k) {
            const int j1 = collist[k];
            v[j1] += d[j1] - min;
        }
        int i;
        do {
            i = pred[endofpath];
            colsol[endofpath] = i;
            const int j1 = rowsol[i];
            rowsol[i] = endofpath;
            endofpath = j1;
        } while (i != freerow);
    }

    double total = 0.0;
    for (int i = 0; i < n; ++i) total += C(i, rowsol[i]);
    return total;
}

} // namespace kpzlab
