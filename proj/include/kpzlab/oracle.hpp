#ifndef KPZLAB_ORACLE_HPP
#define KPZLAB_ORACLE_HPP

#include <map>
#include <string>
#include <vector>

#include "kpzlab/gauss_hermite.hpp"
#include "kpzlab/grid.hpp"
#include "kpzlab/polymer.hpp"
#include "kpzlab/test_function.hpp"

namespace kpzlab {

// One Gaussian coordinate of a tiny system: either an environment entry
// xi(step, site) or an initial-condition increment eta(cell).
struct DimLabel {
    enum class Kind { environment, increment };
    Kind kind;
    int step = 0;   // environment only
    int site = 0;   // environment: site; increment: cell index u
};

// Small lattice window whose complete Gaussian coordinate vector is
// quadrature-sized: d = N*(2L+1) + 2L <= 8. Checks that compare positions
// across sites additionally require L >= N (the center observables then
// never touch the Dirichlet boundary, so they coincide with the
// infinite-lattice ones and lattice shift equivariance is exact).
struct TinySystem {
    GridSpec grid;
    double sigma = 1.0;
    NoiseScheme scheme = NoiseScheme::exponential;

    int dimension() const { return grid.n_steps * grid.n_sites() + grid.n_cells(); }
    std::vector<DimLabel> dim_labels() const;
    void validate(int max_dim = 8) const;
};

// L=1, N=1, dx=1, dt=1/2, sigma=1: d = 5, the smallest system where every
// identity ingredient is nondegenerate.
TinySystem default_tiny_system(NoiseScheme scheme = NoiseScheme::exponential);

// E[F(G)] for the full labeled coordinate vector of the system.
double tiny_expectation(const TinySystem& sys, const QuadratureRule& rule,
                        const std::function<double(std::span<const double>)>& F);

// Center-law moments used by the exact identity checks, all from one sweep:
//   var_delta   = Var[h_t(0)]              (w(0) = 0, so h(0) = h(0) - h_0(0))
//   eta_cov[u]  = E[eta_u * h_t(0)]        per cell u
//   mass[m]     = annealed endpoint mass from the center, per site m
struct CenterMoments {
    double mean_delta = 0.0;
    double var_delta = 0.0;
    std::map<int, double> eta_cov;
    std::map<int, double> mass;

    double cdf(int site) const;
    // Var[h_t(x_j)] on the infinite lattice, reconstructed through exact
    // shift equivariance of the recentered coordinates.
    double g_at(int site, double sigma, double dx) const;
};

CenterMoments compute_center_moments(const TinySystem& sys, const QuadratureRule& rule);

struct OracleCheck {
    std::string name;
    double residual = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::map<std::string, double> detail;
};

// Theorem-1 item 1 on the lattice: forward difference of the reconstructed
// variance against sigma^2 (2 P[Y <= y] - 1), both routes by quadrature.
OracleCheck check_item1_exact(const TinySystem& sys, const QuadratureRule& rule,
                              double threshold = 1e-8);
OracleCheck check_item1_exact(const TinySystem& sys, const CenterMoments& cm,
                              double threshold = 1e-8);

// Variance decomposition g(x) = g(0) - sigma^2|x| + 2 sigma^2 G(x).
OracleCheck check_lemma_variance(const TinySystem& sys, const QuadratureRule& rule,
                                 double threshold = 1e-8);
OracleCheck check_lemma_variance(const TinySystem& sys, const CenterMoments& cm,
                                 double threshold = 1e-8);

// Endpoint symmetry under the annealed law (exact even on the truncated
// window: the Dirichlet window is reflection symmetric).
OracleCheck check_endpoint_symmetry(const TinySystem& sys, const QuadratureRule& rule,
                                    double threshold = 1e-10);
OracleCheck check_endpoint_symmetry(const TinySystem& sys, const CenterMoments& cm,
                                    double threshold = 1e-10);

// Gaussian integration by parts E[X int phi dW] = E[<DX, phi>] for
// X = h_t(x), with the analytic Malliavin derivative on the right.
// `corrupt` perturbs the analytic derivative (negative-control hook).
OracleCheck check_integration_by_parts(const TinySystem& sys, const QuadratureRule& rule,
                                       const TestFunction& phi, int x_site,
                                       double threshold = 1e-8, bool corrupt = false);

// Analytic derivative vs central finite differences at random (non-node)
// Gaussian points.
OracleCheck check_derivative_formula(const TinySystem& sys, int n_points,
                                     std::uint64_t seed = 20240901,
                                     double threshold = 1e-6, bool corrupt = false);

// Two-point identity E[X_t(phi2) X_0(phi1)] = sigma^2 E_t[(phi2 * S phi1)(Y)]
// with the matched discrete summation-by-parts pair (S = [1,2,1]/4 lattice
// smoothing). phi2 is a single-site spike at 0 of the given amplitude;
// phi1 must be supported in sites [-1, 1]; N = 1. The joint functional then
// depends on 6 labeled coordinates: xi(0,-1), xi(0,+1), eta_{-1..2}.
struct Item2System {
    double dx = 1.0;
    double dt = 0.5;
    double sigma = 1.0;
    NoiseScheme scheme = NoiseScheme::exponential;
    TestFunction phi1;      // sites within [-2, 2]
    double phi2_amplitude = 1.0;
};

OracleCheck check_item2_exact(const Item2System& sys, const QuadratureRule& rule,
                              double threshold = 1e-8, int workers = 1);

// Brute-force evaluation of the item-2 left side through the production
// polymer pipeline on an L=2 window (structural cross-check of the bespoke
// fast functional).
double item2_lhs_reference(const Item2System& sys, const QuadratureRule& rule);

// All checks at one order, as run by the verify-tiny command.
struct OracleReport {
    int order = 0;
    std::uint64_t nodes_item1 = 0;
    std::vector<OracleCheck> checks;
    double wall_seconds = 0.0;
    bool all_pass() const;
};

OracleReport run_oracle_checks(NoiseScheme scheme, int order, bool corrupt_derivative = false,
                               int workers = 1);

} // namespace kpzlab

#endif
