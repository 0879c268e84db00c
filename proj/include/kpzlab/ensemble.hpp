#ifndef KPZLAB_ENSEMBLE_HPP
#define KPZLAB_ENSEMBLE_HPP

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kpzlab/accumulator.hpp"
#include "kpzlab/grid.hpp"
#include "kpzlab/polymer.hpp"
#include "kpzlab/test_function.hpp"

namespace kpzlab {

struct TestFunctionSpec {
    std::string shape = "triangle";
    double center = 0.0;
    double width = 2.0;
    double amplitude = 1.0;

    TestFunction build(double dx) const { return make_test_function(shape, center, width, amplitude, dx); }
};

struct EnsembleConfig {
    Manifest manifest;                       // seed, grid, sigma
    NoiseScheme scheme = NoiseScheme::exponential;
    std::int64_t replicas = 1000;
    int workers = 1;
    std::vector<int> probe_sites;            // CDF / item-1 probes (lattice sites)
    std::vector<int> lemma_sites;            // variance-decomposition x sites
    std::vector<int> increment_sites;        // stationarity probes
    std::optional<TestFunctionSpec> phi1;    // two-point pair
    std::optional<TestFunctionSpec> phi2;
    int smooth_halfwidth = 2;
    bool h_route_gpp = false;                // keep per-site h moments for variance-route g''
    std::string dump_realization_path;       // empty = off (dumps replica 0)

    std::vector<int> default_probes() const;
};

// Slot registry of the per-replica core observable vector.
class ObservablePlan {
public:
    explicit ObservablePlan(const EnsembleConfig& cfg);

    const EnsembleConfig& config() const { return cfg_; }
    int core_dim() const { return core_dim_; }
    const std::vector<int>& height_sites() const { return height_sites_; }

    int slot_h(int site) const;
    int slot_h2(int site) const;
    int slot_cdf(int site) const;      // cumulative endpoint mass through site
    int slot_lemma_g(int site) const;  // quenched expectation of the lemma integrand
    int slot_inc(int site) const;      // spatial increment h_t(x) - h_t(0)
    int slot_inc2(int site) const;
    int slot_abs_y() const { return slot_abs_y_; }
    int slot_x0() const { return slot_x0_; }
    int slot_xt() const { return slot_xt_; }
    int slot_x0_sq() const { return slot_x0_sq_; }
    int slot_xt_sq() const { return slot_xt_sq_; }
    int slot_xprod() const { return slot_xprod_; }
    int slot_cc() const { return slot_cc_; }        // (phi2 * phi1)(Y)
    int slot_stein() const { return slot_stein_; }  // (|phi2'| * |psi1|)(Y)

    bool has_two_point() const { return phi1_.has_value(); }
    const TestFunction& phi1() const { return *phi1_; }
    const TestFunction& phi2() const { return *phi2_; }

    // Evaluates one replica into `obs` (pure function of seed and replica id).
    void evaluate(std::int64_t replica_id, Observation& obs) const;
    void init_observation(Observation& obs) const;

private:
    int add_slot();

    EnsembleConfig cfg_;
    GridSpec grid_;
    int core_dim_ = 0;
    std::vector<int> height_sites_;
    std::vector<std::pair<int, int>> h_slots_;       // site -> (h, h2)
    std::vector<std::pair<int, int>> cdf_slots_;     // site -> slot
    std::vector<std::pair<int, int>> lemma_slots_;
    std::vector<std::array<int, 2>> inc_slots_raw_;
    std::vector<int> inc_sites_;
    int slot_abs_y_ = -1;
    int slot_x0_ = -1, slot_xt_ = -1, slot_x0_sq_ = -1, slot_xt_sq_ = -1, slot_xprod_ = -1;
    int slot_cc_ = -1, slot_stein_ = -1;
    std::optional<TestFunction> phi1_, phi2_;
    std::vector<double> cc_by_site_;                 // (phi2 * phi1)(site), indexed by site idx
    std::vector<double> stein_by_site_;              // (|phi2'| * |psi1|)(site)
    std::vector<double> dphi2_;                      // derivative of phi2 on height sites order
};

// Runs `cfg.replicas` independent replicas (ids 0..n-1) on `cfg.workers`
// threads. Identical result bytes for any worker count. `sink`, when set,
// receives every replica's observation (called from worker threads, keyed
// by replica id).
EnsembleAccumulator
run_ensemble(const ObservablePlan& plan,
             const std::function<void(std::int64_t, const Observation&)>& sink = {});

// Runs replica ids [first, last) into a fresh accumulator (merge tests).
EnsembleAccumulator run_ensemble_range(const ObservablePlan& plan, std::int64_t first,
                                       std::int64_t last);

// ---- estimators -----------------------------------------------------------

// g_t(x) = Var[h_t(x)], delta-method (fourth moment) standard error.
EstimateWithError variance_function(const EnsembleMoments& m, const ObservablePlan& plan, int x_site);

// P_t[Y <= y] from x = 0.
EstimateWithError endpoint_cdf(const EnsembleMoments& m, const ObservablePlan& plan, int y_site);

// Residual of g(x) = g(0) - sigma^2|x| + 2 sigma^2 G_t(x).
EstimateWithError g_function_decomposition(const EnsembleMoments& m, const ObservablePlan& plan,
                                           int x_site);

// Residual of forward-difference g'_t(y) = sigma^2 (2 P_t[Y<=y] - 1).
EstimateWithError theorem1_item1_residual(const EnsembleMoments& m, const ObservablePlan& plan,
                                          int y_site);

// CDF reflection-symmetry residual at probe y.
EstimateWithError endpoint_symmetry_residual(const EnsembleMoments& m, const ObservablePlan& plan,
                                             int y_site);

struct TwoPointResult {
    EstimateWithError lhs;        // E[X_t(phi2) X_0(phi1)]
    EstimateWithError rhs;        // sigma^2 E_t[(phi2*phi1)(Y)]
    EstimateWithError difference; // paired SE
};
TwoPointResult two_point(const EnsembleMoments& m, const ObservablePlan& plan);

struct StationaryReport {
    std::vector<std::pair<int, EstimateWithError>> increment_ratio; // Var[h_t(x)-h_t(0)] / |x|
    EstimateWithError mean_abs_y;
    EstimateWithError g_at_zero;
    double relative_gap = 0.0;    // |E|Y| - g(0)| / g(0)
};
StationaryReport stationary_checks(const EnsembleMoments& m, const ObservablePlan& plan);

// Variance-route second derivative of g with moving-average smoothing.
EstimateWithError second_derivative(const EnsembleMoments& m, const ObservablePlan& plan, int y_site,
                                    int smoothing_halfwidth);

// Smoothed annealed endpoint density (mass per unit length) at a site.
EstimateWithError smoothed_density(const EnsembleMoments& m, const ObservablePlan& plan, int y_site);

// Annealed expectation of the Stein kernel (|phi2'| * |psi1|)(Y).
EstimateWithError stein_kernel_expectation(const EnsembleMoments& m, const ObservablePlan& plan);

} // namespace kpzlab

#endif
