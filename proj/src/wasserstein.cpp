#include "kpzlab/wasserstein.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "kpzlab/assignment.hpp"

namespace kpzlab {

SamplePairs sample_joint(const EnsembleConfig& cfg) {
    if (!cfg.phi1 || !cfg.phi2) throw std::invalid_argument("sample_joint: needs the phi1/phi2 pair");
    const ObservablePlan plan(cfg);
    SamplePairs out;
    out.manifest = cfg.manifest;
    out.pts.assign(static_cast<std::size_t>(cfg.replicas), {0.0, 0.0});
    const int sx0 = plan.slot_x0(), sxt = plan.slot_xt();
    run_ensemble(plan, [&](std::int64_t r, const Observation& o) {
        out.pts[static_cast<std::size_t>(r)] = {o.core[sx0], o.core[sxt]};
    });
    return out;
}

SamplePairs apply_permutation(const SamplePairs& pairs, std::span<const int> perm) {
    if (perm.size() != pairs.size()) throw std::invalid_argument("apply_permutation: size mismatch");
    SamplePairs out = pairs;
    for (std::size_t k = 0; k < perm.size(); ++k) out.pts[k][1] = pairs.pts[static_cast<std::size_t>(perm[k])][1];
    return out;
}

SamplePairs product_resample(const SamplePairs& pairs, const GaussianStream& stream,
                             std::uint64_t draw_offset) {
    const std::size_t n = pairs.size();
    std::vector<int> perm(n);
    for (std::size_t k = 0; k < n; ++k) perm[k] = static_cast<int>(k);
    std::uint64_t pos = draw_offset;
    for (std::size_t k = n; k > 1; --k) {
        const std::uint64_t r = stream.bounded_at(pos, k);
        std::swap(perm[k - 1], perm[static_cast<std::size_t>(r)]);
    }
    return apply_permutation(pairs, perm);
}

TransportPlan solve_transport(const SamplePairs& a, const SamplePairs& b) {
    if (a.size() != b.size()) throw std::invalid_argument("solve_transport: sample sizes differ");
    const int n = static_cast<int>(a.size());
    if (n < 1) throw std::invalid_argument("solve_transport: empty samples");
    if (n > kAssignmentCeiling)
        throw std::invalid_argument("solve_transport: n exceeds the exact-solver ceiling");
    std::vector<double> cost(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            cost[static_cast<std::size_t>(i) * n + j] =
                std::hypot(a.pts[i][0] - b.pts[j][0], a.pts[i][1] - b.pts[j][1]);
    TransportPlan plan;
    plan.cost = solve_assignment(n, cost, plan.assignment) / n;
    return plan;
}

double wasserstein1_empirical(const SamplePairs& a, const SamplePairs& b) {
    return solve_transport(a, b).cost;
}

EstimateWithError stein_bound_rhs(const EnsembleMoments& m, const ObservablePlan& plan) {
    constexpr double kPi = 3.14159265358979323846;
    const double sigma = plan.config().manifest.sigma;
    const double norm1 = l2_norm(plan.phi1());
    if (norm1 == 0.0) throw std::invalid_argument("stein_bound_rhs: phi1 is zero");
    const double coef = sigma / norm1 * std::sqrt(kPi / 2.0);
    EstimateWithError e = stein_kernel_expectation(m, plan);
    e.value *= coef;
    e.std_error *= coef;
    return e;
}

BoundReport check_bound(const EnsembleConfig& cfg, int redraws, std::uint64_t permutation_salt) {
    if (redraws < 2) throw std::invalid_argument("check_bound: needs at least 2 permutation redraws");
    const ObservablePlan plan(cfg);
    SamplePairs joint;
    joint.manifest = cfg.manifest;
    joint.pts.assign(static_cast<std::size_t>(cfg.replicas), {0.0, 0.0});
    const int sx0 = plan.slot_x0(), sxt = plan.slot_xt();
    const EnsembleAccumulator acc = run_ensemble(plan, [&](std::int64_t r, const Observation& o) {
        joint.pts[static_cast<std::size_t>(r)] = {o.core[sx0], o.core[sxt]};
    });
    const EnsembleMoments moments = acc.finalize();
    const EstimateWithError rhs = stein_bound_rhs(moments, plan);

    const std::size_t n = joint.size();
    const std::size_t half = n / 2;
    // one exact solve per permutation redraw plus the half-split allowance
    // solve; independent, so run across workers and fold in redraw order
    std::vector<std::array<double, 2>> per_redraw(static_cast<std::size_t>(redraws));
    {
        std::atomic<int> next{0};
        auto work = [&]() {
            for (;;) {
                const int k = next.fetch_add(1);
                if (k >= redraws) break;
                const GaussianStream perm_stream = make_stream(cfg.manifest.seed ^ permutation_salt,
                                                               static_cast<std::uint64_t>(k) + (1ull << 40));
                const SamplePairs prod = product_resample(joint, perm_stream);
                const double w = wasserstein1_empirical(joint, prod);
                SamplePairs ha, hb;
                ha.manifest = hb.manifest = cfg.manifest;
                ha.pts.assign(prod.pts.begin(), prod.pts.begin() + half);
                hb.pts.assign(prod.pts.begin() + half, prod.pts.begin() + 2 * half);
                per_redraw[static_cast<std::size_t>(k)] = {w, wasserstein1_empirical(ha, hb)};
            }
        };
        const int workers = std::max(1, cfg.workers);
        if (workers == 1) {
            work();
        } else {
            std::vector<std::thread> pool;
            for (int t = 0; t < workers; ++t) pool.emplace_back(work);
            for (auto& th : pool) th.join();
        }
    }
    double w_sum = 0.0, w_sq = 0.0, allow_sum = 0.0;
    for (const auto& [w, allow] : per_redraw) {
        w_sum += w;
        w_sq += w * w;
        allow_sum += allow;
    }
    BoundReport rep;
    rep.t = cfg.manifest.grid.time();
    rep.n = static_cast<int>(n);
    rep.redraws = redraws;
    rep.w1 = w_sum / redraws;
    rep.w1_se = std::sqrt(std::max(w_sq / redraws - rep.w1 * rep.w1, 0.0) / redraws);
    rep.rhs = rhs.value;
    rep.rhs_se = rhs.std_error;
    rep.bias_allowance = allow_sum / redraws;
    const double budget = 3.0 * std::sqrt(rep.w1_se * rep.w1_se + rep.rhs_se * rep.rhs_se);
    rep.slack = rep.rhs + budget + rep.bias_allowance - rep.w1;
    rep.pass = rep.slack >= 0.0;
    return rep;
}

EstimateWithError stein_characterization_independent(int n, std::uint64_t seed, double sigma1) {
    const GaussianStream stream = make_stream(seed, 0);
    double s = 0.0, s2 = 0.0;
    const double v1 = sigma1 * sigma1;
    for (int k = 0; k < n; ++k) {
        const double x1 = sigma1 * stream.gaussian_at(2 * static_cast<std::uint64_t>(k));
        const double g2 = stream.gaussian_at(2 * static_cast<std::uint64_t>(k) + 1);
        const double x2 = g2 * g2;   // independent chi-square
        const double c = std::tanh(x2);
        const double nf = v1 * c - x1 * x1 * c;   // N f for f = x1 c(x2)
        s += nf;
        s2 += nf * nf;
    }
    EstimateWithError e;
    e.n = n;
    e.value = s / n;
    e.std_error = std::sqrt(std::max(s2 / n - e.value * e.value, 0.0) / n);
    return e;
}

EstimateWithError stein_characterization_dependent(int n, std::uint64_t seed, double sigma1) {
    const GaussianStream stream = make_stream(seed, 1);
    double s = 0.0, s2 = 0.0;
    const double v1 = sigma1 * sigma1;
    for (int k = 0; k < n; ++k) {
        const double x1 = sigma1 * stream.gaussian_at(static_cast<std::uint64_t>(k));
        const double c = x1 * x1;    // c(x2) = x2^2 with x2 = x1
        const double nf = v1 * c - x1 * x1 * c;
        s += nf;
        s2 += nf * nf;
    }
    EstimateWithError e;
    e.n = n;
    e.value = s / n;
    e.std_error = std::sqrt(std::max(s2 / n - e.value * e.value, 0.0) / n);
    return e;
}

} // namespace kpzlab
