#ifndef KPZLAB_GRID_HPP
#define KPZLAB_GRID_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace kpzlab {

// Space-time lattice for the polymer evolution. Sites are indexed
// j = -half_width .. half_width with position x_j = j*dx; Brownian
// increment cells are u = -half_width+1 .. half_width, cell u covering
// the half-open interval (x_{u-1}, x_u].
struct GridSpec {
    double dx = 0.1;
    double dt = 0.004;
    int half_width = 55;   // L
    int n_steps = 250;     // N, so t = N*dt

    enum class Boundary { dirichlet_zero };
    Boundary boundary = Boundary::dirichlet_zero;

    int n_sites() const { return 2 * half_width + 1; }
    int n_cells() const { return 2 * half_width; }
    double time() const { return dt * n_steps; }
    double position(int j) const { return j * dx; }

    // site index <-> storage index
    int site_to_idx(int j) const { return j + half_width; }
    int idx_to_site(int i) const { return i - half_width; }
    // cell index u in [-L+1, L] <-> storage index in [0, 2L)
    int cell_to_idx(int u) const { return u + half_width - 1; }
    int idx_to_cell(int i) const { return i - half_width + 1; }

    bool contains_site(int j) const { return -half_width <= j && j <= half_width; }
    bool contains_cell(int u) const { return -half_width + 1 <= u && u <= half_width; }

    // Throws std::invalid_argument on hard violations (dt > dx^2, nonpositive
    // steps). Returns a warning string if the domain is narrower than the
    // 4*sqrt(t) rule of thumb, empty otherwise.
    std::string validate() const;

    bool operator==(const GridSpec&) const = default;
};

// Identifies a run: everything a reimplementation needs to reproduce the
// exact Gaussian coordinates and lattice.
struct Manifest {
    std::uint64_t seed = 0;
    std::string generator_family_id = "philox4x32-10:bm-cos:v1";
    GridSpec grid;
    double sigma = 1.0;
};

// FNV-1a over the canonical JSON serialization of a manifest.
std::uint64_t manifest_hash(const Manifest& m);
std::string manifest_hash_hex(const Manifest& m);

} // namespace kpzlab

#endif
