#include "kpzlab/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>
#include <thread>

#include "kpzlab/numerics.hpp"
#include "kpzlab/rng.hpp"

namespace kpzlab {

std::vector<int> EnsembleConfig::default_probes() const {
    const int L = manifest.grid.half_width;
    std::vector<int> p;
    for (int raw : {0, 2, -2, 5, -5, 10, -10, 20, -20}) {
        const int j = std::clamp(raw, -L + 1, L - 1);
        p.push_back(j);
    }
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    return p;
}

int ObservablePlan::add_slot() { return core_dim_++; }

ObservablePlan::ObservablePlan(const EnsembleConfig& cfg) : cfg_(cfg), grid_(cfg.manifest.grid) {
    grid_.validate();
    if (cfg_.probe_sites.empty()) cfg_.probe_sites = cfg_.default_probes();

    const int L = grid_.half_width;
    std::set<int> hsites;
    hsites.insert(0);
    std::set<int> cdf_sites;
    for (int p : cfg_.probe_sites) {
        if (p < -L || p + 1 > L)
            throw std::invalid_argument("probe site " + std::to_string(p) + " (or its forward neighbor) outside lattice");
        hsites.insert(p);
        hsites.insert(p + 1);
        cdf_sites.insert(p);
        cdf_sites.insert(-p);      // symmetry partner
        cdf_sites.insert(p - 1);
        cdf_sites.insert(-p - 1);
    }
    for (int x : cfg_.lemma_sites) {
        if (!grid_.contains_site(x)) throw std::invalid_argument("lemma site outside lattice");
        hsites.insert(x);
    }
    for (int x : cfg_.increment_sites) {
        if (!grid_.contains_site(x)) throw std::invalid_argument("increment site outside lattice");
        hsites.insert(x);
    }
    if (cfg_.phi1.has_value() != cfg_.phi2.has_value())
        throw std::invalid_argument("two-point configuration needs both phi1 and phi2");
    if (cfg_.phi1) {
        phi1_ = cfg_.phi1->build(grid_.dx);
        phi2_ = cfg_.phi2->build(grid_.dx);
        if (!fits_interior(*phi1_, grid_) || !fits_interior(*phi2_, grid_))
            throw std::invalid_argument("test function support margin violated on this lattice");
        for (int s : smear_sites(*phi2_)) hsites.insert(s);
    }
    if (cfg_.h_route_gpp)
        for (int j = -L; j <= L; ++j) hsites.insert(j);

    height_sites_.assign(hsites.begin(), hsites.end());

    for (int s : height_sites_) {
        const int a = add_slot();
        const int b = add_slot();
        h_slots_.push_back({a, b});
        (void)s;
    }
    for (int s : cdf_sites) {
        if (s < -L || s > L) continue;   // mass outside is 0 or 1 deterministically
        cdf_slots_.push_back({s, add_slot()});
    }
    for (int x : cfg_.lemma_sites) lemma_slots_.push_back({x, add_slot()});
    for (int x : cfg_.increment_sites) {
        inc_sites_.push_back(x);
        inc_slots_raw_.push_back({add_slot(), add_slot()});
    }
    slot_abs_y_ = add_slot();
    if (phi1_) {
        slot_x0_ = add_slot();
        slot_xt_ = add_slot();
        slot_x0_sq_ = add_slot();
        slot_xt_sq_ = add_slot();
        slot_xprod_ = add_slot();
        slot_cc_ = add_slot();
        slot_stein_ = add_slot();
        const TestFunction cc = cross_correlate(*phi2_, *phi1_);
        const TestFunction absd2 = abs_values(derivative(*phi2_));
        const PrimitiveFunction psi1 = primitive(*phi1_);
        cc_by_site_.assign(grid_.n_sites(), 0.0);
        stein_by_site_.assign(grid_.n_sites(), 0.0);
        for (int i = 0; i < grid_.n_sites(); ++i) {
            const int site = grid_.idx_to_site(i);
            cc_by_site_[i] = cc.at(site);
            stein_by_site_[i] = cross_with_abs_primitive(absd2, psi1, site);
        }
    }
}

namespace {
int find_slot(const std::vector<std::pair<int, int>>& v, int site, const char* what) {
    for (const auto& [s, slot] : v)
        if (s == site) return slot;
    throw std::out_of_range(std::string(what) + " not registered for site " + std::to_string(site));
}
} // namespace

int ObservablePlan::slot_h(int site) const {
    for (std::size_t k = 0; k < height_sites_.size(); ++k)
        if (height_sites_[k] == site) return h_slots_[k].first;
    throw std::out_of_range("height not registered for site " + std::to_string(site));
}
int ObservablePlan::slot_h2(int site) const {
    for (std::size_t k = 0; k < height_sites_.size(); ++k)
        if (height_sites_[k] == site) return h_slots_[k].second;
    throw std::out_of_range("height not registered for site " + std::to_string(site));
}
int ObservablePlan::slot_cdf(int site) const { return find_slot(cdf_slots_, site, "cdf"); }
int ObservablePlan::slot_lemma_g(int site) const { return find_slot(lemma_slots_, site, "lemma G"); }
int ObservablePlan::slot_inc(int site) const {
    for (std::size_t k = 0; k < inc_sites_.size(); ++k)
        if (inc_sites_[k] == site) return inc_slots_raw_[k][0];
    throw std::out_of_range("increment not registered");
}
int ObservablePlan::slot_inc2(int site) const {
    for (std::size_t k = 0; k < inc_sites_.size(); ++k)
        if (inc_sites_[k] == site) return inc_slots_raw_[k][1];
    throw std::out_of_range("increment not registered");
}

void ObservablePlan::init_observation(Observation& obs) const {
    obs.core.assign(core_dim_, 0.0);
    obs.mass.assign(grid_.n_sites(), 0.0);
    obs.cum.assign(grid_.n_sites(), 0.0);
    obs.smass.assign(grid_.n_sites(), 0.0);
    if (cfg_.h_route_gpp) obs.h_cells.assign(grid_.n_sites(), 0.0);
}

void ObservablePlan::evaluate(std::int64_t replica_id, Observation& obs) const {
    const GridSpec& g = grid_;
    const int S = g.n_sites();
    const int N = g.n_steps;
    const int L = g.half_width;
    const double sigma = cfg_.manifest.sigma;
    const double sq = std::sqrt(g.dx);
    const double a = std::sqrt(g.dt / g.dx);
    const double comp = 0.5 * a * a;

    struct Work {
        std::vector<double> factors, w, expw, row, scratch, h;
    };
    thread_local Work wk;
    wk.factors.resize(static_cast<std::size_t>(N) * S);
    wk.w.resize(S);
    wk.expw.resize(S);
    wk.row.resize(S);
    wk.scratch.resize(S);
    wk.h.resize(height_sites_.size());

    const GaussianStream stream = make_stream(cfg_.manifest.seed, static_cast<std::uint64_t>(replica_id));

    // environment draws [0, N*S), then 2L walk increments
    switch (cfg_.scheme) {
        case NoiseScheme::exponential:
            for (std::size_t k = 0; k < wk.factors.size(); ++k)
                wk.factors[k] = std::exp(a * stream.gaussian_at(k) - comp);
            break;
        case NoiseScheme::clipped_euler:
            for (std::size_t k = 0; k < wk.factors.size(); ++k)
                wk.factors[k] = std::max(1.0 + a * stream.gaussian_at(k), 1e-8);
            break;
        case NoiseScheme::none:
            std::fill(wk.factors.begin(), wk.factors.end(), 1.0);
            break;
    }
    const std::uint64_t base = static_cast<std::uint64_t>(N) * S;
    wk.w[g.site_to_idx(0)] = 0.0;
    for (int j = 1; j <= L; ++j)
        wk.w[g.site_to_idx(j)] = wk.w[g.site_to_idx(j - 1)] + sq * stream.gaussian_at(base + g.cell_to_idx(j));
    for (int j = -1; j >= -L; --j)
        wk.w[g.site_to_idx(j)] = wk.w[g.site_to_idx(j + 1)] - sq * stream.gaussian_at(base + g.cell_to_idx(j + 1));
    for (int i = 0; i < S; ++i) wk.expw[i] = std::exp(sigma * wk.w[i]);

    // heights at registered sites; endpoint masses from the x = 0 row
    for (std::size_t k = 0; k < height_sites_.size(); ++k) {
        const int x = height_sites_[k];
        double scale = 0.0;
        evolve_row_linear(wk.factors, g, x, wk.row, scale, wk.scratch);
        double s = 0.0;
        for (int i = 0; i < S; ++i) s += wk.row[i] * wk.expw[i];
        wk.h[k] = std::log(s) + scale + std::log(g.dx);
        if (x == 0) {
            double tot = 0.0;
            for (int i = 0; i < S; ++i) {
                obs.mass[i] = wk.row[i] * wk.expw[i];
                tot += obs.mass[i];
            }
            double run = 0.0;
            for (int i = 0; i < S; ++i) {
                obs.mass[i] /= tot;
                run += obs.mass[i];
                obs.cum[i] = run;
            }
        }
    }
    const int hw = cfg_.smooth_halfwidth;
    for (int i = 0; i < S; ++i) {
        double s = 0.0;
        for (int k = -hw; k <= hw; ++k) {
            const int j = i + k;
            if (j >= 0 && j < S) s += obs.mass[j];
        }
        obs.smass[i] = s / (2 * hw + 1);
    }

    auto h_at = [&](int site) {
        const auto it = std::lower_bound(height_sites_.begin(), height_sites_.end(), site);
        return wk.h[static_cast<std::size_t>(it - height_sites_.begin())];
    };

    // core vector
    for (std::size_t k = 0; k < height_sites_.size(); ++k) {
        obs.core[h_slots_[k].first] = wk.h[k];
        obs.core[h_slots_[k].second] = wk.h[k] * wk.h[k];
    }
    for (const auto& [site, slot] : cdf_slots_) obs.core[slot] = obs.cum[g.site_to_idx(site)];
    for (const auto& [x, slot] : lemma_slots_) {
        double G = 0.0;
        for (int i = 0; i < S; ++i) {
            const int m = g.idx_to_site(i);
            int cells;
            if (x > 0)
                cells = std::max(std::min(x, x + m), 0);
            else if (x < 0)
                cells = std::max(-std::max(x, x + m), 0);
            else
                cells = 0;
            G += obs.mass[i] * cells;
        }
        obs.core[slot] = G * g.dx;
    }
    for (std::size_t k = 0; k < inc_sites_.size(); ++k) {
        // spatial increment h_t(x) - h_t(0): distributed like h_0(x) at sigma = 1
        const double inc = h_at(inc_sites_[k]) - h_at(0);
        obs.core[inc_slots_raw_[k][0]] = inc;
        obs.core[inc_slots_raw_[k][1]] = inc * inc;
    }
    {
        double ay = 0.0;
        for (int i = 0; i < S; ++i) ay += obs.mass[i] * std::abs(g.idx_to_site(i)) * g.dx;
        obs.core[slot_abs_y_] = ay;
    }
    if (phi1_) {
        const TestFunction d1 = derivative(*phi1_);
        double x0 = 0.0;
        for (int z = d1.lo; z <= d1.hi(); ++z) x0 -= d1.at(z) * sigma * wk.w[g.site_to_idx(z)] * g.dx;
        const TestFunction d2 = derivative(*phi2_);
        double xt = 0.0;
        for (int z = d2.lo; z <= d2.hi(); ++z)
            if (d2.at(z) != 0.0) xt -= d2.at(z) * h_at(z) * g.dx;
        obs.core[slot_x0_] = x0;
        obs.core[slot_xt_] = xt;
        obs.core[slot_x0_sq_] = x0 * x0;
        obs.core[slot_xt_sq_] = xt * xt;
        obs.core[slot_xprod_] = x0 * xt;
        double cc = 0.0, st = 0.0;
        for (int i = 0; i < S; ++i) {
            cc += obs.mass[i] * cc_by_site_[i];
            st += obs.mass[i] * stein_by_site_[i];
        }
        obs.core[slot_cc_] = cc;
        obs.core[slot_stein_] = st;
    }
    if (cfg_.h_route_gpp)
        for (std::size_t k = 0; k < height_sites_.size(); ++k)
            obs.h_cells[g.site_to_idx(height_sites_[k])] = wk.h[k];
}

namespace {

EnsembleAccumulator run_blocks(const ObservablePlan& plan, std::int64_t first, std::int64_t last,
                               const std::function<void(std::int64_t, const Observation&)>& sink) {
    const EnsembleConfig& cfg = plan.config();
    const int band = cfg.h_route_gpp ? 2 * (cfg.smooth_halfwidth + 1) : 0;
    EnsembleAccumulator acc(cfg.manifest, plan.core_dim(), cfg.manifest.grid.n_sites(),
                            cfg.h_route_gpp, band);
    if (last <= first) return acc;

    const std::int64_t b0 = first / EnsembleAccumulator::kBlockSize;
    const std::int64_t b1 = (last - 1) / EnsembleAccumulator::kBlockSize;
    const std::int64_t n_blocks = b1 - b0 + 1;
    const int workers = std::max(1, cfg.workers);

    std::vector<BlockMoments> done(static_cast<std::size_t>(n_blocks));
    std::atomic<std::int64_t> next{0};
    auto worker = [&]() {
        Observation obs;
        plan.init_observation(obs);
        for (;;) {
            const std::int64_t bi = next.fetch_add(1);
            if (bi >= n_blocks) break;
            const std::int64_t block = b0 + bi;
            BlockMoments bm;
            bm.init(plan.core_dim(), cfg.manifest.grid.n_sites(), cfg.h_route_gpp, band);
            const std::int64_t lo = std::max(first, block * EnsembleAccumulator::kBlockSize);
            const std::int64_t hi = std::min(last, (block + 1) * EnsembleAccumulator::kBlockSize);
            for (std::int64_t r = lo; r < hi; ++r) {
                plan.evaluate(r, obs);
                bm.add(obs);
                if (sink) sink(r, obs);
            }
            done[static_cast<std::size_t>(bi)] = std::move(bm);
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (std::int64_t bi = 0; bi < n_blocks; ++bi)
        acc.add_block(b0 + bi, std::move(done[static_cast<std::size_t>(bi)]));
    return acc;
}

} // namespace

EnsembleAccumulator run_ensemble(const ObservablePlan& plan,
                                 const std::function<void(std::int64_t, const Observation&)>& sink) {
    const EnsembleConfig& cfg = plan.config();
    if (!cfg.dump_realization_path.empty() && cfg.replicas > 0) {
        const GaussianStream stream = make_stream(cfg.manifest.seed, 0);
        const Environment env = sample_environment(stream, cfg.manifest.grid);
        const InitialCondition init = sample_initial_walk(stream, cfg.manifest.grid, cfg.manifest.sigma);
        const GreenMatrix green = evolve_green(env, cfg.manifest.grid, cfg.scheme);
        write_realization_csv(cfg.dump_realization_path, cfg.manifest, green, height_field(green, init));
    }
    return run_blocks(plan, 0, cfg.replicas, sink);
}

EnsembleAccumulator run_ensemble_range(const ObservablePlan& plan, std::int64_t first,
                                       std::int64_t last) {
    return run_blocks(plan, first, last, {});
}

// ---- estimators -----------------------------------------------------------

namespace {
double sample_variance(const EnsembleMoments& m, int slot_mean, int slot_sq) {
    const double mu = m.mean(slot_mean);
    return (m.core_sum[slot_sq] - m.n * mu * mu) / (m.n - 1);
}
} // namespace

EstimateWithError variance_function(const EnsembleMoments& m, const ObservablePlan& plan, int x_site) {
    if (m.n < 2) throw std::invalid_argument("variance_function: needs n >= 2");
    const int ih = plan.slot_h(x_site), ih2 = plan.slot_h2(x_site);
    const double v = sample_variance(m, ih, ih2);
    const std::pair<int, double> grad[] = {{ih, -2.0 * m.mean(ih)}, {ih2, 1.0}};
    return m.delta_estimate(v, grad);
}

EstimateWithError endpoint_cdf(const EnsembleMoments& m, const ObservablePlan& plan, int y_site) {
    if (m.n < 1) throw std::invalid_argument("endpoint_cdf: needs n >= 1");
    const GridSpec& g = plan.config().manifest.grid;
    if (y_site >= g.half_width) return {1.0, 0.0, m.n};
    if (y_site < -g.half_width) return {0.0, 0.0, m.n};
    return m.cell_mean(m.cum_sum, m.cum_sq, g.site_to_idx(y_site));
}

EstimateWithError g_function_decomposition(const EnsembleMoments& m, const ObservablePlan& plan,
                                           int x_site) {
    const double sigma = plan.config().manifest.sigma;
    const double dx = plan.config().manifest.grid.dx;
    if (x_site == 0) return {0.0, 0.0, m.n};
    const int ihx = plan.slot_h(x_site), ihx2 = plan.slot_h2(x_site);
    const int ih0 = plan.slot_h(0), ih02 = plan.slot_h2(0);
    const int ig = plan.slot_lemma_g(x_site);
    const double gx = sample_variance(m, ihx, ihx2);
    const double g0 = sample_variance(m, ih0, ih02);
    const double s2 = sigma * sigma;
    const double r = gx - (g0 - s2 * std::abs(x_site) * dx + 2.0 * s2 * m.mean(ig));
    const std::pair<int, double> grad[] = {{ihx, -2.0 * m.mean(ihx)}, {ihx2, 1.0},
                                           {ih0, 2.0 * m.mean(ih0)},  {ih02, -1.0},
                                           {ig, -2.0 * s2}};
    return m.delta_estimate(r, grad);
}

EstimateWithError theorem1_item1_residual(const EnsembleMoments& m, const ObservablePlan& plan,
                                          int y_site) {
    const double sigma = plan.config().manifest.sigma;
    const double dx = plan.config().manifest.grid.dx;
    const int ihp = plan.slot_h(y_site + 1), ihp2 = plan.slot_h2(y_site + 1);
    const int ih = plan.slot_h(y_site), ih2 = plan.slot_h2(y_site);
    const int icdf = plan.slot_cdf(y_site);
    const double s2 = sigma * sigma;
    const double r =
        (sample_variance(m, ihp, ihp2) - sample_variance(m, ih, ih2)) / dx - s2 * (2.0 * m.mean(icdf) - 1.0);
    const std::pair<int, double> grad[] = {{ihp, -2.0 * m.mean(ihp) / dx},
                                           {ihp2, 1.0 / dx},
                                           {ih, 2.0 * m.mean(ih) / dx},
                                           {ih2, -1.0 / dx},
                                           {icdf, -2.0 * s2}};
    return m.delta_estimate(r, grad);
}

EstimateWithError endpoint_symmetry_residual(const EnsembleMoments& m, const ObservablePlan& plan,
                                             int y_site) {
    // P[Y <= -y] - (1 - P[Y <= y-1]) has mean 0 under the reflection symmetry
    const int ia = plan.slot_cdf(-y_site);
    const int ib = plan.slot_cdf(y_site - 1);
    const double r = m.mean(ia) - (1.0 - m.mean(ib));
    const std::pair<int, double> grad[] = {{ia, 1.0}, {ib, 1.0}};
    return m.delta_estimate(r, grad);
}

TwoPointResult two_point(const EnsembleMoments& m, const ObservablePlan& plan) {
    if (!plan.has_two_point()) throw std::invalid_argument("two_point: no test-function pair configured");
    const double s2 = plan.config().manifest.sigma * plan.config().manifest.sigma;
    TwoPointResult r;
    r.lhs = m.mean_estimate(plan.slot_xprod());
    r.rhs = m.mean_estimate(plan.slot_cc());
    r.rhs.value *= s2;
    r.rhs.std_error *= s2;
    const std::pair<int, double> grad[] = {{plan.slot_xprod(), 1.0}, {plan.slot_cc(), -s2}};
    r.difference = m.delta_estimate(r.lhs.value - r.rhs.value, grad);
    return r;
}

StationaryReport stationary_checks(const EnsembleMoments& m, const ObservablePlan& plan) {
    if (plan.config().manifest.sigma != 1.0)
        throw std::invalid_argument("stationary_checks: the stationarity claim is specific to sigma = 1");
    StationaryReport rep;
    const double dx = plan.config().manifest.grid.dx;
    for (int x : plan.config().increment_sites) {
        if (x == 0) continue;
        const int ii = plan.slot_inc(x), ii2 = plan.slot_inc2(x);
        const double v = sample_variance(m, ii, ii2);
        const double ax = std::abs(x) * dx;
        const std::pair<int, double> grad[] = {{ii, -2.0 * m.mean(ii) / ax}, {ii2, 1.0 / ax}};
        rep.increment_ratio.push_back({x, m.delta_estimate(v / ax, grad)});
    }
    rep.mean_abs_y = m.mean_estimate(plan.slot_abs_y());
    rep.g_at_zero = variance_function(m, plan, 0);
    rep.relative_gap = std::abs(rep.mean_abs_y.value - rep.g_at_zero.value) / rep.g_at_zero.value;
    return rep;
}

EstimateWithError second_derivative(const EnsembleMoments& m, const ObservablePlan& plan, int y_site,
                                    int smoothing_halfwidth) {
    if (m.h_sum.empty())
        throw std::invalid_argument("second_derivative: run with h_route_gpp enabled");
    const GridSpec& g = plan.config().manifest.grid;
    const int hw = smoothing_halfwidth;
    if (hw < 0 || 2 * (hw + 1) > m.band)
        throw std::invalid_argument("second_derivative: smoothing halfwidth exceeds the recorded band");
    const int L = g.half_width;
    if (y_site - hw - 1 < -L || y_site + hw + 1 > L)
        throw std::invalid_argument("second_derivative: smoothing window leaves the lattice");

    const double dx2 = g.dx * g.dx;
    const int W = 2 * hw + 1;
    std::vector<double> a(2 * hw + 3, 0.0);   // offsets -(hw+1) .. hw+1
    auto aw = [&](int o) -> double& { return a[o + hw + 1]; };
    for (int k = -hw; k <= hw; ++k) {
        aw(k + 1) += 1.0 / (W * dx2);
        aw(k) += -2.0 / (W * dx2);
        aw(k - 1) += 1.0 / (W * dx2);
    }

    auto mu1 = [&](int site) { return m.h_sum[g.site_to_idx(site)] / m.n; };
    auto mu2 = [&](int site) { return m.h_sq[g.site_to_idx(site)] / m.n; };
    auto ghat = [&](int site) {
        const double u = mu1(site);
        return (m.h_sq[g.site_to_idx(site)] - m.n * u * u) / (m.n - 1);
    };
    // per-replica covariance of (h(z), h^2(z)) against (h(z'), h^2(z'))
    auto raw = [&](const std::vector<double>& packed, int site, int off) {
        return packed[static_cast<std::size_t>(off - 1) * g.n_sites() + g.site_to_idx(site)] / m.n;
    };
    auto cov_g = [&](int z1, int z2) {
        if (z2 < z1) std::swap(z1, z2);
        const int off = z2 - z1;
        double Ehh, Ehh2, Eh2h, Eh2h2;
        if (off == 0) {
            Ehh = mu2(z1);
            Ehh2 = m.h_cu[g.site_to_idx(z1)] / m.n;
            Eh2h = Ehh2;
            Eh2h2 = m.h_qu[g.site_to_idx(z1)] / m.n;
        } else {
            Ehh = raw(m.hh, z1, off);
            Ehh2 = raw(m.hh2, z1, off);
            Eh2h = raw(m.h2h, z1, off);
            Eh2h2 = raw(m.h2h2, z1, off);
        }
        const double c_hh = Ehh - mu1(z1) * mu1(z2);
        const double c_hh2 = Ehh2 - mu1(z1) * mu2(z2);
        const double c_h2h = Eh2h - mu2(z1) * mu1(z2);
        const double c_h2h2 = Eh2h2 - mu2(z1) * mu2(z2);
        const double g1 = -2.0 * mu1(z1), g2 = -2.0 * mu1(z2);
        return g1 * g2 * c_hh + g1 * c_hh2 + g2 * c_h2h + c_h2h2;
    };

    double value = 0.0;
    for (int o = -(hw + 1); o <= hw + 1; ++o) value += aw(o) * ghat(y_site + o);
    double var = 0.0;
    for (int o1 = -(hw + 1); o1 <= hw + 1; ++o1)
        for (int o2 = -(hw + 1); o2 <= hw + 1; ++o2)
            var += aw(o1) * aw(o2) * cov_g(y_site + o1, y_site + o2);
    EstimateWithError e;
    e.n = m.n;
    e.value = value;
    e.std_error = std::sqrt(std::max(var, 0.0) / m.n);
    return e;
}

EstimateWithError smoothed_density(const EnsembleMoments& m, const ObservablePlan& plan, int y_site) {
    const GridSpec& g = plan.config().manifest.grid;
    EstimateWithError e = m.cell_mean(m.smass_sum, m.smass_sq, g.site_to_idx(y_site));
    e.value /= g.dx;
    e.std_error /= g.dx;
    return e;
}

EstimateWithError stein_kernel_expectation(const EnsembleMoments& m, const ObservablePlan& plan) {
    if (!plan.has_two_point()) throw std::invalid_argument("stein_kernel_expectation: no pair configured");
    return m.mean_estimate(plan.slot_stein());
}

} // namespace kpzlab
