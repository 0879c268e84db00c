#include "kpzlab/oracle.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "kpzlab/numerics.hpp"
#include "kpzlab/rng.hpp"

namespace kpzlab {

std::vector<DimLabel> TinySystem::dim_labels() const {
    std::vector<DimLabel> labels;
    labels.reserve(dimension());
    for (int n = 0; n < grid.n_steps; ++n)
        for (int i = 0; i < grid.n_sites(); ++i)
            labels.push_back({DimLabel::Kind::environment, n, grid.idx_to_site(i)});
    for (int i = 0; i < grid.n_cells(); ++i)
        labels.push_back({DimLabel::Kind::increment, 0, grid.idx_to_cell(i)});
    return labels;
}

void TinySystem::validate(int max_dim) const {
    grid.validate();
    if (dimension() > max_dim)
        throw std::invalid_argument("TinySystem: Gaussian dimension " + std::to_string(dimension()) +
                                    " exceeds the quadrature ceiling " + std::to_string(max_dim));
}

TinySystem default_tiny_system(NoiseScheme scheme) {
    TinySystem sys;
    sys.grid.dx = 1.0;
    sys.grid.dt = 0.5;
    sys.grid.half_width = 1;
    sys.grid.n_steps = 1;
    sys.sigma = 1.0;
    sys.scheme = scheme;
    return sys;
}

namespace {

// Reusable per-thread evaluator: maps a coordinate vector onto the window's
// environment factors and walk, then evolves Green rows through the shared
// production kernel.
struct TinyEval {
    GridSpec grid;
    double sigma;
    NoiseScheme scheme;
    double coupling;                 // sqrt(dt/dx)
    std::vector<double> factors;     // N x sites, linear
    std::vector<double> w;           // sites
    std::vector<double> row, scratch, expw;
    double row_scale = 0.0;

    explicit TinyEval(const TinySystem& sys)
        : grid(sys.grid), sigma(sys.sigma), scheme(sys.scheme),
          coupling(std::sqrt(sys.grid.dt / sys.grid.dx)),
          factors(static_cast<std::size_t>(sys.grid.n_steps) * sys.grid.n_sites()),
          w(sys.grid.n_sites()), row(sys.grid.n_sites()), scratch(sys.grid.n_sites()),
          expw(sys.grid.n_sites()) {}

    bool matches(const TinySystem& sys) const {
        return grid == sys.grid && sigma == sys.sigma && scheme == sys.scheme;
    }

    void load(std::span<const double> coords) {
        const int S = grid.n_sites();
        const int env_n = grid.n_steps * S;
        const double comp = 0.5 * coupling * coupling;
        for (int k = 0; k < env_n; ++k) {
            switch (scheme) {
                case NoiseScheme::exponential: factors[k] = std::exp(coupling * coords[k] - comp); break;
                case NoiseScheme::clipped_euler: factors[k] = std::max(1.0 + coupling * coords[k], 1e-8); break;
                case NoiseScheme::none: factors[k] = 1.0; break;
            }
        }
        const int L = grid.half_width;
        const double sq = std::sqrt(grid.dx);
        auto eta = [&](int u) { return coords[env_n + grid.cell_to_idx(u)]; };
        w[grid.site_to_idx(0)] = 0.0;
        for (int j = 1; j <= L; ++j) w[grid.site_to_idx(j)] = w[grid.site_to_idx(j - 1)] + sq * eta(j);
        for (int j = -1; j >= -L; --j) w[grid.site_to_idx(j)] = w[grid.site_to_idx(j + 1)] - sq * eta(j + 1);
        for (int i = 0; i < S; ++i) expw[i] = std::exp(sigma * w[i]);
    }

    void evolve(int x_site) { evolve_row_linear(factors, grid, x_site, row, row_scale, scratch); }

    // log Z_t(x) for the currently evolved row
    double height() const {
        double s = 0.0;
        for (int i = 0; i < grid.n_sites(); ++i) s += row[i] * expw[i];
        return std::log(s) + row_scale + std::log(grid.dx);
    }

    // normalized endpoint masses for the currently evolved row
    void masses(std::span<double> out) const {
        double tot = 0.0;
        for (int i = 0; i < grid.n_sites(); ++i) {
            out[i] = row[i] * expw[i];
            tot += out[i];
        }
        for (int i = 0; i < grid.n_sites(); ++i) out[i] /= tot;
    }
};

Environment env_from_coords(const TinySystem& sys, std::span<const double> coords) {
    Environment env;
    env.n_steps = sys.grid.n_steps;
    env.n_sites = sys.grid.n_sites();
    env.xi.assign(coords.begin(), coords.begin() + env.n_steps * env.n_sites);
    return env;
}

InitialCondition init_from_coords(const TinySystem& sys, std::span<const double> coords) {
    InitialCondition init;
    init.sigma = sys.sigma;
    const int env_n = sys.grid.n_steps * sys.grid.n_sites();
    init.eta.assign(coords.begin() + env_n, coords.end());
    init.w.assign(sys.grid.n_sites(), 0.0);
    const double sq = std::sqrt(sys.grid.dx);
    const int L = sys.grid.half_width;
    for (int j = 1; j <= L; ++j)
        init.w[sys.grid.site_to_idx(j)] =
            init.w[sys.grid.site_to_idx(j - 1)] + sq * init.eta[sys.grid.cell_to_idx(j)];
    for (int j = -1; j >= -L; --j)
        init.w[sys.grid.site_to_idx(j)] =
            init.w[sys.grid.site_to_idx(j + 1)] - sq * init.eta[sys.grid.cell_to_idx(j + 1)];
    return init;
}

} // namespace

double tiny_expectation(const TinySystem& sys, const QuadratureRule& rule,
                        const std::function<double(std::span<const double>)>& F) {
    sys.validate();
    return quad_expectation(rule, sys.dimension(), F);
}

double CenterMoments::cdf(int site) const {
    double s = 0.0;
    for (const auto& [m, p] : mass)
        if (m <= site) s += p;
    return s;
}

double CenterMoments::g_at(int site, double sigma, double dx) const {
    const double sq = std::sqrt(dx);
    double S = 0.0;
    if (site > 0) {
        for (int v = 1 - site; v <= 0; ++v) {
            auto it = eta_cov.find(v);
            if (it != eta_cov.end()) S += it->second;
        }
    } else if (site < 0) {
        for (int v = 1; v <= -site; ++v) {
            auto it = eta_cov.find(v);
            if (it != eta_cov.end()) S -= it->second;
        }
    }
    return sigma * sigma * std::abs(site) * dx + var_delta + 2.0 * sigma * sq * S;
}

CenterMoments compute_center_moments(const TinySystem& sys, const QuadratureRule& rule) {
    sys.validate();
    if (sys.grid.half_width < sys.grid.n_steps)
        throw std::invalid_argument(
            "compute_center_moments: needs half_width >= n_steps so the center row "
            "never touches the boundary");
    const int d = sys.dimension();
    const int S = sys.grid.n_sites();
    const int C = sys.grid.n_cells();
    const int env_n = sys.grid.n_steps * S;

    // outputs: [ D, D^2, eta_u*D (C), mass_m (S) ]
    const int n_out = 2 + C + S;
    std::vector<double> sums(n_out, 0.0);
    const TinySystem sys_copy = sys;

    tensor_expectation(
        rule, d,
        [&sys_copy, env_n, C, S](std::span<const double> coords, std::span<double> out) {
            thread_local TinyEval eval{sys_copy};
            thread_local std::vector<double> m;
            if (!eval.matches(sys_copy)) eval = TinyEval(sys_copy);
            m.resize(static_cast<std::size_t>(S));
            eval.load(coords);
            eval.evolve(0);
            const double D = eval.height();   // w(0)=0, so this is h(0)-h_0(0)
            out[0] = D;
            out[1] = D * D;
            for (int c = 0; c < C; ++c) out[2 + c] = coords[env_n + c] * D;
            eval.masses(m);
            for (int i = 0; i < S; ++i) out[2 + C + i] = m[i];
        },
        sums);

    CenterMoments cm;
    cm.mean_delta = sums[0];
    cm.var_delta = sums[1] - sums[0] * sums[0];
    for (int c = 0; c < C; ++c) cm.eta_cov[sys.grid.idx_to_cell(c)] = sums[2 + c];
    for (int i = 0; i < S; ++i) cm.mass[sys.grid.idx_to_site(i)] = sums[2 + C + i];
    return cm;
}

OracleCheck check_item1_exact(const TinySystem& sys, const QuadratureRule& rule, double threshold) {
    return check_item1_exact(sys, compute_center_moments(sys, rule), threshold);
}

OracleCheck check_item1_exact(const TinySystem& sys, const CenterMoments& cm, double threshold) {
    const int reach = sys.grid.n_steps;
    OracleCheck chk;
    chk.name = "item1_exact";
    chk.threshold = threshold;
    for (int j = -(reach + 2); j <= reach + 1; ++j) {
        const double lhs = (cm.g_at(j + 1, sys.sigma, sys.grid.dx) - cm.g_at(j, sys.sigma, sys.grid.dx)) / sys.grid.dx;
        const double rhs = sys.sigma * sys.sigma * (2.0 * cm.cdf(j) - 1.0);
        const double r = std::abs(lhs - rhs);
        chk.detail["cell_" + std::to_string(j)] = r;
        chk.residual = std::max(chk.residual, r);
    }
    chk.pass = chk.residual <= threshold;
    return chk;
}

OracleCheck check_lemma_variance(const TinySystem& sys, const QuadratureRule& rule, double threshold) {
    return check_lemma_variance(sys, compute_center_moments(sys, rule), threshold);
}

OracleCheck check_lemma_variance(const TinySystem& sys, const CenterMoments& cm, double threshold) {
    const int reach = sys.grid.n_steps;
    OracleCheck chk;
    chk.name = "lemma_variance";
    chk.threshold = threshold;
    const double s2 = sys.sigma * sys.sigma;
    for (int j = -(reach + 2); j <= reach + 2; ++j) {
        if (j == 0) continue;
        double G = 0.0;
        for (const auto& [m, p] : cm.mass) {
            int cells;
            if (j > 0)
                cells = std::max(std::min(j, j + m), 0);
            else
                cells = std::max(-std::max(j, j + m), 0);
            G += p * cells * sys.grid.dx;
        }
        const double lhs = cm.g_at(j, sys.sigma, sys.grid.dx);
        const double rhs = cm.g_at(0, sys.sigma, sys.grid.dx) - s2 * std::abs(j) * sys.grid.dx + 2.0 * s2 * G;
        const double r = std::abs(lhs - rhs);
        chk.detail["x_" + std::to_string(j)] = r;
        chk.residual = std::max(chk.residual, r);
    }
    chk.pass = chk.residual <= threshold;
    return chk;
}

OracleCheck check_endpoint_symmetry(const TinySystem& sys, const QuadratureRule& rule, double threshold) {
    return check_endpoint_symmetry(sys, compute_center_moments(sys, rule), threshold);
}

OracleCheck check_endpoint_symmetry(const TinySystem& sys, const CenterMoments& cm, double threshold) {
    OracleCheck chk;
    chk.name = "endpoint_symmetry";
    chk.threshold = threshold;
    for (int y = 0; y <= sys.grid.half_width; ++y) {
        // P[Y <= -y] vs 1 - P[Y <= y-1]
        const double r = std::abs(cm.cdf(-y) - (1.0 - cm.cdf(y - 1)));
        chk.detail["y_" + std::to_string(y)] = r;
        chk.residual = std::max(chk.residual, r);
    }
    chk.pass = chk.residual <= threshold;
    return chk;
}

OracleCheck check_integration_by_parts(const TinySystem& sys, const QuadratureRule& rule,
                                       const TestFunction& phi, int x_site, double threshold,
                                       bool corrupt) {
    sys.validate();
    const int d = sys.dimension();
    const int S = sys.grid.n_sites();
    const int C = sys.grid.n_cells();
    const int env_n = sys.grid.n_steps * S;
    const double sq = std::sqrt(sys.grid.dx);
    const double corruption = corrupt ? 1.001 : 1.0;
    const TinySystem sys_copy = sys;

    std::vector<double> phibar(C);
    for (int c = 0; c < C; ++c) phibar[c] = phi.cell_average(sys.grid.idx_to_cell(c));

    std::vector<double> sums(2, 0.0);
    tensor_expectation(
        rule, d,
        [&](std::span<const double> coords, std::span<double> out) {
            thread_local TinyEval eval{sys_copy};
            thread_local std::vector<double> m;
            if (!eval.matches(sys_copy)) eval = TinyEval(sys_copy);
            m.resize(static_cast<std::size_t>(S));
            eval.load(coords);
            eval.evolve(x_site);
            const double h = eval.height() + 0.0;
            eval.masses(m);
            // int phi dW  ->  sqrt(dx) sum_u phibar(u) eta_u
            double wint = 0.0;
            for (int c = 0; c < C; ++c) wint += phibar[c] * coords[env_n + c];
            wint *= sq;
            out[0] = h * wint;
            // <Dh, phi> -> sqrt(dx) sum_u phibar(u) * dh/deta_u
            double rhs = 0.0;
            for (int c = 0; c < C; ++c) {
                const int u = sys_copy.grid.idx_to_cell(c);
                double e;   // E_q[ind_Y(u)]
                if (u >= 1) {
                    e = 0.0;
                    for (int j = u; j <= sys_copy.grid.half_width; ++j) e += m[sys_copy.grid.site_to_idx(j)];
                } else {
                    e = 0.0;
                    for (int j = -sys_copy.grid.half_width; j <= u - 1; ++j) e -= m[sys_copy.grid.site_to_idx(j)];
                }
                rhs += phibar[c] * (sys_copy.sigma * sq * e * corruption);
            }
            out[1] = sq * rhs;
        },
        sums);

    OracleCheck chk;
    chk.name = "integration_by_parts_x" + std::to_string(x_site);
    chk.threshold = threshold;
    chk.residual = std::abs(sums[0] - sums[1]);
    chk.detail["lhs"] = sums[0];
    chk.detail["rhs"] = sums[1];
    chk.pass = chk.residual <= threshold;
    return chk;
}

OracleCheck check_derivative_formula(const TinySystem& sys, int n_points, std::uint64_t seed,
                                     double threshold, bool corrupt) {
    sys.validate(16);   // random points, not a tensor sweep: dimension cap not binding
    const int d = sys.dimension();
    const double corruption = corrupt ? 1.001 : 1.0;
    const double fd_step = 1e-5;

    OracleCheck chk;
    chk.name = "derivative_formula";
    chk.threshold = threshold;

    auto rebuild_walk = [&](InitialCondition& ic) {
        const double sq = std::sqrt(sys.grid.dx);
        ic.w.assign(sys.grid.n_sites(), 0.0);
        for (int j = 1; j <= sys.grid.half_width; ++j)
            ic.w[sys.grid.site_to_idx(j)] =
                ic.w[sys.grid.site_to_idx(j - 1)] + sq * ic.eta[sys.grid.cell_to_idx(j)];
        for (int j = -1; j >= -sys.grid.half_width; --j)
            ic.w[sys.grid.site_to_idx(j)] =
                ic.w[sys.grid.site_to_idx(j + 1)] - sq * ic.eta[sys.grid.cell_to_idx(j + 1)];
    };

    std::vector<double> coords(d);
    for (int p = 0; p < n_points; ++p) {
        GaussianStream stream(seed, static_cast<std::uint64_t>(p));
        for (int k = 0; k < d; ++k) coords[k] = stream.gaussian_at(k);
        const Environment env = env_from_coords(sys, coords);
        InitialCondition init = init_from_coords(sys, coords);
        const GreenMatrix green = evolve_green(env, sys.grid, sys.scheme);
        for (int xi = 0; xi < sys.grid.n_sites(); ++xi) {
            const int x = sys.grid.idx_to_site(xi);
            const QuenchedEndpoint qe = quenched_density(green, init, x);
            for (int c = 0; c < sys.grid.n_cells(); ++c) {
                const int u = sys.grid.idx_to_cell(c);
                const double analytic = malliavin_derivative_height(qe, sys.sigma, u) * corruption;
                // The Green rows do not depend on eta, so only the walk is
                // rebuilt for the finite-difference bump.
                InitialCondition bumped = init;
                bumped.eta[c] = init.eta[c] + fd_step;
                rebuild_walk(bumped);
                const double hp = partition_function(green, bumped, x);
                bumped.eta[c] = init.eta[c] - fd_step;
                rebuild_walk(bumped);
                const double hm = partition_function(green, bumped, x);
                const double fd = (hp - hm) / (2.0 * fd_step);
                const double denom = std::max(std::abs(analytic), std::abs(fd));
                const double rel = denom > 1e-10 ? std::abs(analytic - fd) / denom : std::abs(analytic - fd);
                chk.residual = std::max(chk.residual, rel);
            }
        }
    }
    chk.pass = chk.residual <= threshold;
    return chk;
}

OracleCheck check_item2_exact(const Item2System& sys, const QuadratureRule& rule, double threshold,
                              int workers) {
    if (sys.phi1.values.empty() || sys.phi1.lo < -1 || sys.phi1.hi() > 1)
        throw std::invalid_argument("check_item2_exact: phi1 must be supported in sites [-1, 1]");
    const double dx = sys.dx, dt = sys.dt, sigma = sys.sigma;
    const double ps = dt / (2.0 * dx * dx), pc = 1.0 - dt / (dx * dx);
    const double a = std::sqrt(dt / dx);
    const double sq = std::sqrt(dx);
    const double amp = sys.phi2_amplitude;
    const double pb_m1 = sys.phi1.cell_average(-1), pb_0 = sys.phi1.cell_average(0);
    const double pb_1 = sys.phi1.cell_average(1), pb_2 = sys.phi1.cell_average(2);

    // dims: [xi(0,-1), xi(0,+1), eta_{-1}, eta_0, eta_1, eta_2]
    double lhs = 0.0;
    {
        double sum = 0.0;
        tensor_expectation(
            rule, 6,
            [&](std::span<const double> c, std::span<double> out) {
                const double fm = sys.scheme == NoiseScheme::exponential
                                      ? std::exp(a * c[0] - a * a / 2.0)
                                      : (sys.scheme == NoiseScheme::clipped_euler
                                             ? std::max(1.0 + a * c[0], 1e-8)
                                             : 1.0);
                const double fp = sys.scheme == NoiseScheme::exponential
                                      ? std::exp(a * c[1] - a * a / 2.0)
                                      : (sys.scheme == NoiseScheme::clipped_euler
                                             ? std::max(1.0 + a * c[1], 1e-8)
                                             : 1.0);
                const double em1 = std::exp(sigma * sq * c[2]);
                const double e0 = std::exp(sigma * sq * c[3]);
                const double e1 = std::exp(sigma * sq * c[4]);
                const double e2 = std::exp(sigma * sq * c[5]);
                // e^{sigma w_y}: w_{-2} = -(eta_0+eta_{-1})sq, w_{-1}=-eta_0 sq,
                // w_0=0, w_1=eta_1 sq, w_2=(eta_1+eta_2)sq
                const double h_m1 = std::log(fm * (ps / (e0 * em1) + pc / e0 + ps));
                const double h_p1 = std::log(fp * (ps + pc * e1 + ps * e1 * e2));
                const double Xt = 0.5 * amp * (h_p1 - h_m1);
                const double X0 = sigma * sq * (pb_m1 * c[2] + pb_0 * c[3] + pb_1 * c[4] + pb_2 * c[5]);
                out[0] = Xt * X0;
            },
            std::span<double>(&sum, 1), workers);
        lhs = sum;
    }

    // rhs: sigma^2 E_t[(phi2 * S phi1)(Y)], masses from the 2-dim center law
    TestFunction spike;
    spike.dx = dx;
    spike.lo = 0;
    spike.values = {amp};
    const TestFunction cc = cross_correlate(spike, smooth121(sys.phi1));
    double rhs = 0.0;
    {
        std::vector<double> sums(3, 0.0);   // masses of Y = -1, 0, 1
        tensor_expectation(
            rule, 2,
            [&](std::span<const double> c, std::span<double> out) {
                const double wm = ps * std::exp(-sigma * sq * c[0]);
                const double wp = ps * std::exp(sigma * sq * c[1]);
                const double tot = wm + pc + wp;
                out[0] = wm / tot;
                out[1] = pc / tot;
                out[2] = wp / tot;
            },
            sums);
        rhs = sigma * sigma * (sums[0] * cc.at(-1) + sums[1] * cc.at(0) + sums[2] * cc.at(1));
    }

    OracleCheck chk;
    chk.name = "item2_exact";
    chk.threshold = threshold;
    chk.residual = std::abs(lhs - rhs);
    chk.detail["lhs"] = lhs;
    chk.detail["rhs"] = rhs;
    chk.pass = chk.residual <= threshold;
    return chk;
}

double item2_lhs_reference(const Item2System& sys, const QuadratureRule& rule) {
    // L=2, N=1 window: full 9-dimensional coordinate vector through the
    // production pipeline; the three extra coordinates integrate out.
    TinySystem win;
    win.grid.dx = sys.dx;
    win.grid.dt = sys.dt;
    win.grid.half_width = 2;
    win.grid.n_steps = 1;
    win.sigma = sys.sigma;
    win.scheme = sys.scheme;
    const int d = win.dimension();
    const double amp = sys.phi2_amplitude;
    const TestFunction d1 = derivative(sys.phi1);

    double sum = 0.0;
    tensor_expectation(
        rule, d,
        [&](std::span<const double> coords, std::span<double> out) {
            const Environment env = env_from_coords(win, coords);
            const InitialCondition init = init_from_coords(win, coords);
            const std::vector<int> rows = {-1, 1};
            const GreenMatrix green = evolve_green_rows(env, win.grid, win.scheme, rows);
            const double Xt =
                0.5 * amp * (partition_function(green, init, 1) - partition_function(green, init, -1));
            double X0 = 0.0;
            for (int j = d1.lo; j <= d1.hi(); ++j)
                X0 -= d1.at(j) * sys.sigma * init.w[win.grid.site_to_idx(j)] * sys.dx;
            out[0] = Xt * X0;
        },
        std::span<double>(&sum, 1));
    return sum;
}

bool OracleReport::all_pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

OracleReport run_oracle_checks(NoiseScheme scheme, int order, bool corrupt_derivative, int workers) {
    const auto t0 = std::chrono::steady_clock::now();
    OracleReport rep;
    rep.order = order;
    const QuadratureRule rule = gauss_hermite_rule(order);
    const TinySystem sys = default_tiny_system(scheme);
    rep.nodes_item1 = tensor_node_count(order, sys.dimension());

    const CenterMoments cm = compute_center_moments(sys, rule);
    rep.checks.push_back(check_item1_exact(sys, cm));
    rep.checks.push_back(check_lemma_variance(sys, cm));
    rep.checks.push_back(check_endpoint_symmetry(sys, cm));

    TestFunction phi;   // values on sites 0..1; cell averages live on the window cells
    phi.dx = sys.grid.dx;
    phi.lo = 0;
    phi.values = {1.0, -0.7};
    rep.checks.push_back(check_integration_by_parts(sys, rule, phi, 0, 1e-8, corrupt_derivative));
    rep.checks.push_back(check_integration_by_parts(sys, rule, phi, 1, 1e-8, corrupt_derivative));

    rep.checks.push_back(check_derivative_formula(sys, 100, 20240901, 1e-6, corrupt_derivative));

    Item2System it2;
    it2.dx = sys.grid.dx;
    it2.dt = sys.grid.dt;
    it2.sigma = sys.sigma;
    it2.scheme = scheme;
    it2.phi1.dx = sys.grid.dx;
    it2.phi1.lo = -1;
    it2.phi1.values = {0.5, 1.0, 0.5};
    it2.phi2_amplitude = 1.0;
    rep.checks.push_back(check_item2_exact(it2, rule, 1e-8, workers));

    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

} // namespace kpzlab
