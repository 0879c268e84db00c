#include "kpzlab/polymer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "kpzlab/numerics.hpp"

namespace kpzlab {

NoiseScheme noise_scheme_from_string(const std::string& s) {
    if (s == "exponential") return NoiseScheme::exponential;
    if (s == "clipped_euler") return NoiseScheme::clipped_euler;
    if (s == "none") return NoiseScheme::none;
    throw std::invalid_argument("unknown noise scheme: " + s);
}

std::string to_string(NoiseScheme s) {
    switch (s) {
        case NoiseScheme::exponential: return "exponential";
        case NoiseScheme::clipped_euler: return "clipped_euler";
        case NoiseScheme::none: return "none";
    }
    return "?";
}

std::vector<double> noise_factors(const Environment* env, const GridSpec& grid, NoiseScheme scheme) {
    const std::size_t total = static_cast<std::size_t>(grid.n_steps) * grid.n_sites();
    std::vector<double> f(total, 1.0);
    if (scheme == NoiseScheme::none) return f;
    if (env == nullptr) throw std::invalid_argument("noise_factors: environment required for noisy schemes");
    if (env->n_steps != grid.n_steps || env->n_sites != grid.n_sites())
        throw std::invalid_argument("noise_factors: environment does not match grid");
    const double a = std::sqrt(grid.dt / grid.dx);
    if (scheme == NoiseScheme::exponential) {
        const double comp = 0.5 * a * a;   // dt/(2dx)
        for (std::size_t k = 0; k < total; ++k) f[k] = std::exp(a * env->xi[k] - comp);
    } else {
        for (std::size_t k = 0; k < total; ++k) f[k] = std::max(1.0 + a * env->xi[k], 1e-8);
    }
    return f;
}

int GreenMatrix::row_index(int site) const {
    auto it = std::lower_bound(row_sites.begin(), row_sites.end(), site);
    if (it == row_sites.end() || *it != site) return -1;
    return static_cast<int>(it - row_sites.begin());
}

std::span<const double> GreenMatrix::row(int site) const {
    const int r = row_index(site);
    if (r < 0) throw std::out_of_range("GreenMatrix: row not evolved for site " + std::to_string(site));
    return log_z[r];
}

void evolve_row_linear(std::span<const double> factors, const GridSpec& grid, int x_site,
                       std::span<double> out_linear, double& out_log_scale,
                       std::span<double> scratch) {
    const int S = grid.n_sites();
    const int N = grid.n_steps;
    const double ps = grid.dt / (2.0 * grid.dx * grid.dx);
    const double pc = 1.0 - grid.dt / (grid.dx * grid.dx);

    // Row x of D_{N-1} K ... D_0 K applied to e_x / dx, by the adjoint
    // recursion v <- K (D_n . v), n = N-1 .. 0 (K is symmetric).
    double* v = out_linear.data();
    double* next = scratch.data();
    std::fill(v, v + S, 0.0);
    v[grid.site_to_idx(x_site)] = 1.0;
    double log_scale = -std::log(grid.dx);
    for (int n = N - 1; n >= 0; --n) {
        const double* d = factors.data() + static_cast<std::size_t>(n) * S;
        for (int i = 0; i < S; ++i) v[i] *= d[i];
        for (int i = 0; i < S; ++i) {
            double acc = pc * v[i];
            if (i > 0) acc += ps * v[i - 1];
            if (i + 1 < S) acc += ps * v[i + 1];
            next[i] = acc;
        }
        std::swap(v, next);
        const double m = *std::max_element(v, v + S);
        if (m > 0.0 && (m > 1e150 || m < 1e-150)) {
            const double inv = 1.0 / m;
            for (int i = 0; i < S; ++i) v[i] *= inv;
            log_scale += std::log(m);
        }
    }
    if (v != out_linear.data()) std::copy(v, v + S, out_linear.data());
    out_log_scale = log_scale;
}

GreenMatrix evolve_green_rows(std::span<const double> factors, const GridSpec& grid,
                              std::span<const int> rows) {
    const std::string warn = grid.validate();   // throws on hard violations
    (void)warn;
    const int S = grid.n_sites();
    const int N = grid.n_steps;
    if (factors.size() != static_cast<std::size_t>(N) * S)
        throw std::invalid_argument("evolve_green_rows: factor table does not match grid");

    GreenMatrix out;
    out.grid = grid;
    out.row_sites.assign(rows.begin(), rows.end());
    std::sort(out.row_sites.begin(), out.row_sites.end());
    out.row_sites.erase(std::unique(out.row_sites.begin(), out.row_sites.end()), out.row_sites.end());
    for (int s : out.row_sites)
        if (!grid.contains_site(s)) throw std::out_of_range("evolve_green_rows: row site outside lattice");

    const auto full_loss = heat_kernel_mass_loss(grid);
    out.log_z.reserve(out.row_sites.size());
    out.mass_loss.reserve(out.row_sites.size());

    std::vector<double> v(S), scratch(S);
    for (int x : out.row_sites) {
        double log_scale = 0.0;
        evolve_row_linear(factors, grid, x, v, log_scale, scratch);
        std::vector<double> logs(S);
        for (int i = 0; i < S; ++i) logs[i] = v[i] > 0.0 ? std::log(v[i]) + log_scale : kNegInf;
        out.log_z.push_back(std::move(logs));
        out.mass_loss.push_back(full_loss[grid.site_to_idx(x)]);
    }
    return out;
}

GreenMatrix evolve_green(const Environment& env, const GridSpec& grid, NoiseScheme scheme) {
    std::vector<int> rows(grid.n_sites());
    for (int i = 0; i < grid.n_sites(); ++i) rows[i] = grid.idx_to_site(i);
    return evolve_green_rows(env, grid, scheme, rows);
}

GreenMatrix evolve_green_rows(const Environment& env, const GridSpec& grid, NoiseScheme scheme,
                              std::span<const int> rows) {
    const auto f = noise_factors(scheme == NoiseScheme::none ? nullptr : &env, grid, scheme);
    return evolve_green_rows(f, grid, rows);
}

std::vector<double> heat_kernel_mass_loss(const GridSpec& grid) {
    const int S = grid.n_sites();
    const double ps = grid.dt / (2.0 * grid.dx * grid.dx);
    const double pc = 1.0 - grid.dt / (grid.dx * grid.dx);
    std::vector<double> q(S, 1.0), next(S);
    for (int n = 0; n < grid.n_steps; ++n) {
        for (int i = 0; i < S; ++i) {
            double acc = pc * q[i];
            if (i > 0) acc += ps * q[i - 1];
            if (i + 1 < S) acc += ps * q[i + 1];
            next[i] = acc;
        }
        std::swap(q, next);
    }
    std::vector<double> loss(S);
    for (int i = 0; i < S; ++i) loss[i] = 1.0 - q[i];
    return loss;
}

double partition_function(const GreenMatrix& green, const InitialCondition& init, int x_site) {
    const auto lz = green.row(x_site);
    const double sigma = init.sigma;
    double m = kNegInf;
    const std::size_t S = lz.size();
    for (std::size_t i = 0; i < S; ++i) {
        const double v = lz[i] + sigma * init.w[i];
        if (v > m) m = v;
    }
    if (m == kNegInf) return kNegInf;
    double s = 0.0;
    for (std::size_t i = 0; i < S; ++i) {
        const double v = lz[i] + sigma * init.w[i];
        if (v != kNegInf) s += std::exp(v - m);
    }
    return m + std::log(s) + std::log(green.grid.dx);
}

double HeightField::at(int site) const {
    auto it = std::lower_bound(sites.begin(), sites.end(), site);
    if (it == sites.end() || *it != site) throw std::out_of_range("HeightField: site not present");
    return h[static_cast<std::size_t>(it - sites.begin())];
}

HeightField height_field(const GreenMatrix& green, const InitialCondition& init) {
    HeightField out;
    out.grid = green.grid;
    out.sites = green.row_sites;
    out.h.reserve(out.sites.size());
    for (int s : out.sites) out.h.push_back(partition_function(green, init, s));
    return out;
}

QuenchedEndpoint quenched_density(const GreenMatrix& green, const InitialCondition& init, int x_site) {
    const auto lz = green.row(x_site);
    QuenchedEndpoint qe;
    qe.grid = green.grid;
    qe.x_site = x_site;
    qe.t = green.grid.time();
    const std::size_t S = lz.size();
    qe.probs.assign(S, 0.0);
    double m = kNegInf;
    for (std::size_t i = 0; i < S; ++i) {
        const double v = lz[i] + init.sigma * init.w[i];
        if (v > m) m = v;
    }
    if (m == kNegInf) throw std::runtime_error("quenched_density: empty Green row");
    double total = 0.0;
    for (std::size_t i = 0; i < S; ++i) {
        const double v = lz[i] + init.sigma * init.w[i];
        qe.probs[i] = v == kNegInf ? 0.0 : std::exp(v - m);
        total += qe.probs[i];
    }
    for (double& p : qe.probs) p /= total;
    return qe;
}

double QuenchedEndpoint::cdf(int site) const {
    if (site < -grid.half_width) return 0.0;
    const int hi = std::min(site, grid.half_width);
    double s = 0.0;
    for (int j = -grid.half_width; j <= hi; ++j) s += probs[grid.site_to_idx(j)];
    return s;
}

double quenched_expectation(const QuenchedEndpoint& qe, const std::function<double(double)>& f) {
    double s = 0.0;
    for (int i = 0; i < static_cast<int>(qe.probs.size()); ++i)
        s += f(qe.grid.position(qe.grid.idx_to_site(i))) * qe.probs[i];
    return s;
}

double malliavin_derivative_height(const QuenchedEndpoint& qe, double sigma, int u_cell) {
    const GridSpec& g = qe.grid;
    const double sq = std::sqrt(g.dx);
    if (u_cell >= 1) {
        if (u_cell > g.half_width) return 0.0;
        double tail = 0.0;
        for (int j = u_cell; j <= g.half_width; ++j) tail += qe.probs[g.site_to_idx(j)];
        return sigma * sq * tail;
    }
    if (u_cell <= -g.half_width) return 0.0;
    double head = 0.0;
    for (int j = -g.half_width; j <= u_cell - 1; ++j) head += qe.probs[g.site_to_idx(j)];
    return -sigma * sq * head;
}

void write_realization_csv(const std::string& path, const Manifest& manifest,
                           const GreenMatrix& green, const HeightField& h) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    char buf[64];
    const GridSpec& g = green.grid;
    out << "# kpzlab realization dump\n";
    out << "# manifest_hash=" << manifest_hash_hex(manifest) << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", g.dx);
    out << "# dx=" << buf;
    std::snprintf(buf, sizeof buf, "%.17g", g.dt);
    out << " dt=" << buf << " half_width=" << g.half_width << " n_steps=" << g.n_steps << "\n";
    out << "record,site_x,site_y,value\n";
    auto emit = [&](const char* rec, int sx, int sy, double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << rec << ',' << sx << ',' << sy << ',' << buf << '\n';
    };
    for (std::size_t r = 0; r < green.row_sites.size(); ++r)
        for (int i = 0; i < g.n_sites(); ++i)
            emit("log_z", green.row_sites[r], g.idx_to_site(i), green.log_z[r][i]);
    for (std::size_t r = 0; r < h.sites.size(); ++r) emit("h", h.sites[r], 0, h.h[r]);
}

} // namespace kpzlab
