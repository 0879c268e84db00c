#ifndef KPZLAB_WASSERSTEIN_HPP
#define KPZLAB_WASSERSTEIN_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "kpzlab/ensemble.hpp"
#include "kpzlab/rng.hpp"

namespace kpzlab {

// Per-replica pairs (X_0(phi1), X_t(phi2)): an n-sample of the joint law.
struct SamplePairs {
    Manifest manifest;
    std::vector<std::array<double, 2>> pts;

    std::size_t size() const { return pts.size(); }
};

// Feasible matching between equal-size empirical measures.
struct TransportPlan {
    std::vector<int> assignment;   // point k of `a` -> point assignment[k] of `b`
    double cost = 0.0;             // average Euclidean cost (W1)
};

// n = cfg.replicas joint evaluations (requires the phi1/phi2 pair in cfg).
SamplePairs sample_joint(const EnsembleConfig& cfg);

// Empirical product measure: second coordinates permuted uniformly at
// random (Fisher-Yates on the given stream); marginals preserved exactly.
SamplePairs product_resample(const SamplePairs& pairs, const GaussianStream& stream,
                             std::uint64_t draw_offset = 0);
SamplePairs apply_permutation(const SamplePairs& pairs, std::span<const int> perm);

inline constexpr int kAssignmentCeiling = 4096;

TransportPlan solve_transport(const SamplePairs& a, const SamplePairs& b);
double wasserstein1_empirical(const SamplePairs& a, const SamplePairs& b);

// (sigma / ||phi1||) sqrt(pi/2) E_t[(|phi2'| * |psi1|)(Y)] from ensemble moments.
EstimateWithError stein_bound_rhs(const EnsembleMoments& m, const ObservablePlan& plan);

struct BoundReport {
    double t = 0.0;
    int n = 0;
    int redraws = 0;
    double w1 = 0.0;
    double w1_se = 0.0;
    double rhs = 0.0;
    double rhs_se = 0.0;
    double bias_allowance = 0.0;
    double slack = 0.0;      // rhs + 3*SE + allowance - w1
    bool pass = false;
};

// Wasserstein decorrelation bound: W1(joint, product) against the
// Stein-Malliavin right-hand side, with a permutation-resampling SE and an
// empirical finite-sample W1 allowance (W1 between the two halves of the
// product sample).
BoundReport check_bound(const EnsembleConfig& cfg, int redraws = 20,
                        std::uint64_t permutation_salt = 0x77a5);

// E[N f(X1, X2)] for f(x1,x2) = x1 c(x2), c = tanh, X1 ~ N(0, sigma1^2),
// X2 an independent chi-square variable: must vanish (3-SE check).
EstimateWithError stein_characterization_independent(int n, std::uint64_t seed, double sigma1 = 1.0);

// Dependent negative control: X2 = X1, c(x) = x^2; E[N f] = -2 sigma1^4.
EstimateWithError stein_characterization_dependent(int n, std::uint64_t seed, double sigma1 = 1.0);

} // namespace kpzlab

#endif
