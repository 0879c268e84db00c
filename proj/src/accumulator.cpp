#include "kpzlab/accumulator.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace kpzlab {

void BlockMoments::init(int core_dim, int n_sites, bool h_route, int band_width) {
    n = 0;
    core_sum.assign(core_dim, 0.0);
    core_cross.assign(static_cast<std::size_t>(core_dim) * core_dim, 0.0);
    mass_sum.assign(n_sites, 0.0);
    mass_sq.assign(n_sites, 0.0);
    cum_sum.assign(n_sites, 0.0);
    cum_sq.assign(n_sites, 0.0);
    smass_sum.assign(n_sites, 0.0);
    smass_sq.assign(n_sites, 0.0);
    band = h_route ? band_width : 0;
    if (h_route) {
        h_sum.assign(n_sites, 0.0);
        h_sq.assign(n_sites, 0.0);
        h_cu.assign(n_sites, 0.0);
        h_qu.assign(n_sites, 0.0);
        const std::size_t packed = static_cast<std::size_t>(band) * n_sites;
        hh.assign(packed, 0.0);
        hh2.assign(packed, 0.0);
        h2h.assign(packed, 0.0);
        h2h2.assign(packed, 0.0);
    }
}

void BlockMoments::add(const Observation& o) {
    ++n;
    const int K = static_cast<int>(core_sum.size());
    for (int i = 0; i < K; ++i) core_sum[i] += o.core[i];
    for (int i = 0; i < K; ++i) {
        const double oi = o.core[i];
        double* row = core_cross.data() + static_cast<std::size_t>(i) * K;
        for (int j = 0; j < K; ++j) row[j] += oi * o.core[j];
    }
    const int S = static_cast<int>(mass_sum.size());
    for (int i = 0; i < S; ++i) {
        mass_sum[i] += o.mass[i];
        mass_sq[i] += o.mass[i] * o.mass[i];
        cum_sum[i] += o.cum[i];
        cum_sq[i] += o.cum[i] * o.cum[i];
        smass_sum[i] += o.smass[i];
        smass_sq[i] += o.smass[i] * o.smass[i];
    }
    if (!h_sum.empty()) {
        for (int i = 0; i < S; ++i) {
            const double h = o.h_cells[i], h2 = h * h;
            h_sum[i] += h;
            h_sq[i] += h2;
            h_cu[i] += h2 * h;
            h_qu[i] += h2 * h2;
        }
        for (int b = 1; b <= band; ++b) {
            double* phh = hh.data() + static_cast<std::size_t>(b - 1) * S;
            double* phh2 = hh2.data() + static_cast<std::size_t>(b - 1) * S;
            double* ph2h = h2h.data() + static_cast<std::size_t>(b - 1) * S;
            double* ph2h2 = h2h2.data() + static_cast<std::size_t>(b - 1) * S;
            for (int i = 0; i + b < S; ++i) {
                const double x = o.h_cells[i], y = o.h_cells[i + b];
                phh[i] += x * y;
                phh2[i] += x * y * y;
                ph2h[i] += x * x * y;
                ph2h2[i] += x * x * y * y;
            }
        }
    }
}

namespace {
void add_vec(std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}
} // namespace

void BlockMoments::merge_from(const BlockMoments& other) {
    n += other.n;
    add_vec(core_sum, other.core_sum);
    add_vec(core_cross, other.core_cross);
    add_vec(mass_sum, other.mass_sum);
    add_vec(mass_sq, other.mass_sq);
    add_vec(cum_sum, other.cum_sum);
    add_vec(cum_sq, other.cum_sq);
    add_vec(smass_sum, other.smass_sum);
    add_vec(smass_sq, other.smass_sq);
    add_vec(h_sum, other.h_sum);
    add_vec(h_sq, other.h_sq);
    add_vec(h_cu, other.h_cu);
    add_vec(h_qu, other.h_qu);
    add_vec(hh, other.hh);
    add_vec(hh2, other.hh2);
    add_vec(h2h, other.h2h);
    add_vec(h2h2, other.h2h2);
}

double EnsembleMoments::cov(int i, int j) const {
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    const double mi = mean(i), mj = mean(j);
    const double cross = core_cross[static_cast<std::size_t>(i) * core_dim + j];
    return (cross - n * mi * mj) / (n - 1);
}

EstimateWithError EnsembleMoments::mean_estimate(int i) const {
    EstimateWithError e;
    e.n = n;
    e.value = mean(i);
    e.std_error = n >= 2 ? std::sqrt(std::max(cov(i, i), 0.0) / n)
                         : std::numeric_limits<double>::quiet_NaN();
    return e;
}

EstimateWithError EnsembleMoments::delta_estimate(
    double value, std::span<const std::pair<int, double>> gradient) const {
    EstimateWithError e;
    e.n = n;
    e.value = value;
    if (n < 2) {
        e.std_error = std::numeric_limits<double>::quiet_NaN();
        return e;
    }
    double var = 0.0;
    for (const auto& [i, gi] : gradient)
        for (const auto& [j, gj] : gradient) var += gi * gj * cov(i, j);
    e.std_error = std::sqrt(std::max(var, 0.0) / n);
    return e;
}

EstimateWithError EnsembleMoments::cell_mean(const std::vector<double>& sum,
                                             const std::vector<double>& sq, int idx) const {
    EstimateWithError e;
    e.n = n;
    e.value = sum[idx] / n;
    if (n >= 2) {
        const double var = (sq[idx] - n * e.value * e.value) / (n - 1);
        e.std_error = std::sqrt(std::max(var, 0.0) / n);
    } else {
        e.std_error = std::numeric_limits<double>::quiet_NaN();
    }
    return e;
}

EnsembleAccumulator::EnsembleAccumulator(Manifest manifest, int core_dim, int n_sites, bool h_route,
                                         int band)
    : manifest_(manifest), core_dim_(core_dim), n_sites_(n_sites), h_route_(h_route), band_(band) {}

void EnsembleAccumulator::add(std::int64_t replica_id, const Observation& o) {
    const std::int64_t b = replica_id / kBlockSize;
    auto [it, inserted] = blocks_.try_emplace(b);
    if (inserted) it->second.init(core_dim_, n_sites_, h_route_, band_);
    it->second.add(o);
}

void EnsembleAccumulator::add_block(std::int64_t block_id, BlockMoments&& block) {
    auto [it, inserted] = blocks_.try_emplace(block_id);
    if (inserted)
        it->second = std::move(block);
    else
        it->second.merge_from(block);
}

void EnsembleAccumulator::merge(const EnsembleAccumulator& other) {
    if (core_dim_ == 0 && blocks_.empty()) {
        *this = other;
        return;
    }
    if (other.core_dim_ != core_dim_ || other.n_sites_ != n_sites_)
        throw std::invalid_argument("EnsembleAccumulator::merge: layout mismatch");
    if (manifest_hash(other.manifest_) != manifest_hash(manifest_))
        throw std::invalid_argument("EnsembleAccumulator::merge: manifest mismatch");
    for (const auto& [b, m] : other.blocks_) {
        auto [it, inserted] = blocks_.try_emplace(b);
        if (inserted)
            it->second = m;
        else
            it->second.merge_from(m);
    }
}

EnsembleMoments EnsembleAccumulator::finalize() const {
    EnsembleMoments out;
    out.core_dim = core_dim_;
    out.n_sites = n_sites_;
    out.band = band_;
    BlockMoments total;
    total.init(core_dim_, n_sites_, h_route_, band_);
    for (const auto& [b, m] : blocks_) total.merge_from(m);   // ascending block order
    out.n = total.n;
    out.core_sum = std::move(total.core_sum);
    out.core_cross = std::move(total.core_cross);
    out.mass_sum = std::move(total.mass_sum);
    out.mass_sq = std::move(total.mass_sq);
    out.cum_sum = std::move(total.cum_sum);
    out.cum_sq = std::move(total.cum_sq);
    out.smass_sum = std::move(total.smass_sum);
    out.smass_sq = std::move(total.smass_sq);
    out.h_sum = std::move(total.h_sum);
    out.h_sq = std::move(total.h_sq);
    out.h_cu = std::move(total.h_cu);
    out.h_qu = std::move(total.h_qu);
    out.hh = std::move(total.hh);
    out.hh2 = std::move(total.hh2);
    out.h2h = std::move(total.h2h);
    out.h2h2 = std::move(total.h2h2);
    return out;
}

std::int64_t EnsembleAccumulator::n_replicas() const {
    std::int64_t n = 0;
    for (const auto& [b, m] : blocks_) n += m.n;
    return n;
}

} // namespace kpzlab
