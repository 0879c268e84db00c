#include "kpzlab/environment.hpp"

#include <cmath>

namespace kpzlab {

Environment sample_environment(const GaussianStream& stream, const GridSpec& grid) {
    Environment env;
    env.n_steps = grid.n_steps;
    env.n_sites = grid.n_sites();
    env.xi.resize(static_cast<std::size_t>(env.n_steps) * env.n_sites);
    for (std::size_t k = 0; k < env.xi.size(); ++k) env.xi[k] = stream.gaussian_at(k);
    return env;
}

InitialCondition sample_initial_walk(const GaussianStream& stream, const GridSpec& grid, double sigma) {
    InitialCondition init;
    init.sigma = sigma;
    const int L = grid.half_width;
    const std::uint64_t base = environment_draws(grid);
    init.eta.resize(grid.n_cells());
    for (int i = 0; i < grid.n_cells(); ++i) init.eta[i] = stream.gaussian_at(base + i);

    // w[j] = sqrt(dx) * (eta over cells 1..j for j > 0, minus eta over cells
    // j+1..0 for j < 0); anchored w[0] = 0 exactly.
    init.w.assign(grid.n_sites(), 0.0);
    const double sq = std::sqrt(grid.dx);
    for (int j = 1; j <= L; ++j)
        init.w[grid.site_to_idx(j)] = init.w[grid.site_to_idx(j - 1)] + sq * init.eta[grid.cell_to_idx(j)];
    for (int j = -1; j >= -L; --j)
        init.w[grid.site_to_idx(j)] = init.w[grid.site_to_idx(j + 1)] - sq * init.eta[grid.cell_to_idx(j + 1)];
    return init;
}

} // namespace kpzlab
