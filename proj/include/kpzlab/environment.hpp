#ifndef KPZLAB_ENVIRONMENT_HPP
#define KPZLAB_ENVIRONMENT_HPP

#include <vector>

#include "kpzlab/grid.hpp"
#include "kpzlab/rng.hpp"

namespace kpzlab {

// Unit-variance Gaussians discretizing the space-time white noise, one per
// (time step n, site j). Stored unscaled; the evolution applies the
// sqrt(dt/dx) coupling.
struct Environment {
    int n_steps = 0;
    int n_sites = 0;
    std::vector<double> xi;   // row-major, xi[n*n_sites + site_idx]

    double at(int n, int site_idx) const { return xi[static_cast<std::size_t>(n) * n_sites + site_idx]; }
    double& at(int n, int site_idx) { return xi[static_cast<std::size_t>(n) * n_sites + site_idx]; }
};

// Two-sided random-walk initial condition h_0 = sigma * w. eta holds the
// standard Gaussian increments per cell; w the anchored walk, w[0] = 0 and
// w[j] - w[j-1] = sqrt(dx) * eta[cell j].
struct InitialCondition {
    double sigma = 0.0;
    std::vector<double> eta;  // cell-indexed, size 2L
    std::vector<double> w;    // site-indexed, size 2L+1

    double walk_at(const GridSpec& g, int site) const { return w[g.site_to_idx(site)]; }
};

// Stream layout: the environment consumes draw indices [0, N*(2L+1)), the
// initial condition the following 2L. Fixed so that the same (seed, replica)
// reproduces bit-identical coordinates in any implementation.
inline std::uint64_t environment_draws(const GridSpec& g) {
    return static_cast<std::uint64_t>(g.n_steps) * g.n_sites();
}

Environment sample_environment(const GaussianStream& stream, const GridSpec& grid);
InitialCondition sample_initial_walk(const GaussianStream& stream, const GridSpec& grid, double sigma);

} // namespace kpzlab

#endif
