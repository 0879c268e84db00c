#ifndef KPZLAB_POLYMER_HPP
#define KPZLAB_POLYMER_HPP

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "kpzlab/environment.hpp"
#include "kpzlab/grid.hpp"

namespace kpzlab {

// Multiplicative noise discretization applied after each heat-kernel step.
//  exponential:   exp(sqrt(dt/dx)*xi - dt/(2dx))   (Ito compensator, mean 1)
//  clipped_euler: max(1 + sqrt(dt/dx)*xi, 1e-8)
//  none:          1 (pure heat kernel; the "xi == 0" reduction)
enum class NoiseScheme { exponential, clipped_euler, none };

NoiseScheme noise_scheme_from_string(const std::string& s);
std::string to_string(NoiseScheme s);

// Per-(step, site) linear-domain noise factors. env may be null only for
// NoiseScheme::none.
std::vector<double> noise_factors(const Environment* env, const GridSpec& grid, NoiseScheme scheme);

// Discretized Green function rows: log of Z_t(x_row, y) * (per-cell mass
// convention), i.e. sum_j exp(log_z[row][j]) * dx approximates the integral
// of Z over y. Entries outside the N-step reach are exactly -inf.
struct GreenMatrix {
    GridSpec grid;
    std::vector<int> row_sites;            // ascending
    std::vector<std::vector<double>> log_z; // [row][site_idx], length n_sites
    std::vector<double> mass_loss;          // per row, heat-kernel mass absorbed at the boundary

    int row_index(int site) const;          // -1 if absent
    std::span<const double> row(int site) const;
    bool has_row(int site) const { return row_index(site) >= 0; }
};

// Transfer-matrix evolution of the requested rows (adjoint single-row
// recursion, O(N * sites) per row). `factors` as built by noise_factors.
GreenMatrix evolve_green_rows(std::span<const double> factors, const GridSpec& grid,
                              std::span<const int> rows);

// Single row in linear domain with an explicit log scale:
//   Z(x, y) * dx = out_linear[y_idx] * exp(out_log_scale - log(dx)) ... i.e.
//   log Z(x,y) = log(out_linear[y_idx]) + out_log_scale - log(dx).
// `scratch` must have n_sites elements. This is the one evolution kernel;
// everything else in the module is built on it.
void evolve_row_linear(std::span<const double> factors, const GridSpec& grid, int x_site,
                       std::span<double> out_linear, double& out_log_scale,
                       std::span<double> scratch);

// All rows.
GreenMatrix evolve_green(const Environment& env, const GridSpec& grid,
                         NoiseScheme scheme = NoiseScheme::exponential);
GreenMatrix evolve_green_rows(const Environment& env, const GridSpec& grid, NoiseScheme scheme,
                              std::span<const int> rows);

// 1 - (K^N 1)_i : fraction of heat-kernel mass absorbed by the Dirichlet
// boundary for a walk started at site i. Noise independent.
std::vector<double> heat_kernel_mass_loss(const GridSpec& grid);

// log Z_t(x) = log sum_j exp(log_z[x][j] + sigma w[j]) dx, max-shifted.
double partition_function(const GreenMatrix& green, const InitialCondition& init, int x_site);

struct HeightField {
    GridSpec grid;
    std::vector<int> sites;
    std::vector<double> h;

    double at(int site) const;
};

// h on every row the Green matrix carries.
HeightField height_field(const GreenMatrix& green, const InitialCondition& init);

// Quenched endpoint law p_{x,t} as a probability mass function over sites.
struct QuenchedEndpoint {
    GridSpec grid;
    int x_site = 0;
    double t = 0.0;
    std::vector<double> probs;   // per site, sums to 1

    // cumulative mass P[Y <= site]
    double cdf(int site) const;
};

QuenchedEndpoint quenched_density(const GreenMatrix& green, const InitialCondition& init, int x_site);

double quenched_expectation(const QuenchedEndpoint& qe, const std::function<double(double)>& f);

// d h_t(x) / d eta_u = sigma*sqrt(dx)*E_{x,t}[ind_Y(u)]; the signed-indicator
// expectation is P[Y >= u] for u >= 1 and -P[Y <= u-1] for u <= 0.
double malliavin_derivative_height(const QuenchedEndpoint& qe, double sigma, int u_cell);

// Per-realization dump for cross-implementation regression tests.
void write_realization_csv(const std::string& path, const Manifest& manifest,
                           const GreenMatrix& green, const HeightField& h);

} // namespace kpzlab

#endif
