#ifndef KPZLAB_ACCUMULATOR_HPP
#define KPZLAB_ACCUMULATOR_HPP

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "kpzlab/grid.hpp"

namespace kpzlab {

struct EstimateWithError {
    double value = 0.0;
    double std_error = 0.0;   // NaN when undefined (n too small)
    std::int64_t n = 0;
};

// One replica's registered observables. `core` carries everything that
// needs cross-covariances (delta-method standard errors of combined
// residuals); the cell arrays carry lattice-indexed quantities with
// per-cell errors only.
struct Observation {
    std::vector<double> core;
    std::vector<double> mass;     // endpoint mass per site, from x = 0
    std::vector<double> cum;      // cumulative mass per site
    std::vector<double> smass;    // moving-average smoothed mass per site
    std::vector<double> h_cells;  // h_t per site (variance-route g'' only)
};

// Streaming sums over one 64-replica block. Blocks are the atomic
// bracketing unit of floating-point accumulation: any partition of replica
// ranges across workers or merges reproduces the same finalized bytes as
// long as splits respect block boundaries.
struct BlockMoments {
    std::int64_t n = 0;
    std::vector<double> core_sum;     // K
    std::vector<double> core_cross;   // K x K, row-major
    std::vector<double> mass_sum, mass_sq;
    std::vector<double> cum_sum, cum_sq;
    std::vector<double> smass_sum, smass_sq;
    std::vector<double> h_sum, h_sq, h_cu, h_qu;          // per site
    std::vector<double> hh, hh2, h2h, h2h2;               // banded cross sums, packed [offset-1][site]
    int band = 0;

    void init(int core_dim, int n_sites, bool h_route, int band_width);
    void add(const Observation& o);
    void merge_from(const BlockMoments& other);
};

// Finalized grand moments (blocks folded in ascending block order).
struct EnsembleMoments {
    std::int64_t n = 0;
    int core_dim = 0;
    int n_sites = 0;
    int band = 0;
    std::vector<double> core_sum, core_cross;
    std::vector<double> mass_sum, mass_sq, cum_sum, cum_sq, smass_sum, smass_sq;
    std::vector<double> h_sum, h_sq, h_cu, h_qu;
    std::vector<double> hh, hh2, h2h, h2h2;

    double mean(int i) const { return core_sum[i] / n; }
    // sample covariance of core components
    double cov(int i, int j) const;
    // value +- SE for the mean of one core component
    EstimateWithError mean_estimate(int i) const;
    // delta-method SE for a smooth function of core means
    EstimateWithError delta_estimate(double value,
                                     std::span<const std::pair<int, double>> gradient) const;
    // per-site helpers for the cell arrays
    EstimateWithError cell_mean(const std::vector<double>& sum, const std::vector<double>& sq,
                                int idx) const;
};

// Deterministically mergeable accumulator keyed by 64-replica blocks.
class EnsembleAccumulator {
public:
    static constexpr std::int64_t kBlockSize = 64;

    EnsembleAccumulator() = default;
    EnsembleAccumulator(Manifest manifest, int core_dim, int n_sites, bool h_route, int band);

    void add(std::int64_t replica_id, const Observation& o);
    void add_block(std::int64_t block_id, BlockMoments&& block);

    // Disjoint replica ranges only; partial blocks merge by summation, so
    // bit-exact equality with a single pass holds when the split is
    // block-aligned (the engine only ever splits at block boundaries).
    void merge(const EnsembleAccumulator& other);

    EnsembleMoments finalize() const;

    const Manifest& manifest() const { return manifest_; }
    std::int64_t n_replicas() const;
    int core_dim() const { return core_dim_; }

private:
    Manifest manifest_;
    int core_dim_ = 0;
    int n_sites_ = 0;
    bool h_route_ = false;
    int band_ = 0;
    std::map<std::int64_t, BlockMoments> blocks_;
};

} // namespace kpzlab

#endif
