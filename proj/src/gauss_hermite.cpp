#include "kpzlab/gauss_hermite.hpp"

#include <cmath>
#include <future>
#include <stdexcept>

namespace kpzlab {

namespace {

// Orthonormal probabilists' Hermite value and derivative at x.
// p_{k+1} = (x p_k - sqrt(k) p_{k-1}) / sqrt(k+1), p'_m = sqrt(m) p_{m-1}.
void hermite_eval(int m, double x, double& pm, double& pm1) {
    double pprev = 0.0, p = 1.0;
    for (int k = 0; k < m; ++k) {
        const double pnext = (x * p - std::sqrt(static_cast<double>(k)) * pprev) / std::sqrt(k + 1.0);
        pprev = p;
        p = pnext;
    }
    pm = p;
    pm1 = pprev;
}

} // namespace

QuadratureRule gauss_hermite_rule(int order) {
    if (order < 1) throw std::invalid_argument("gauss_hermite_rule: order must be >= 1");
    QuadratureRule r;
    r.order = order;
    r.nodes.assign(order, 0.0);
    r.weights.assign(order, 0.0);

    // Newton from the classical initial guesses (largest root inward),
    // exploiting the +- symmetry of the roots.
    const int half = (order + 1) / 2;
    const double s2 = std::sqrt(2.0);
    std::vector<double> found;
    double z = 0.0;
    for (int i = 0; i < half; ++i) {
        if (i == 0) {
            z = s2 * (std::sqrt(2.0 * order + 1.0) - 1.85575 * std::pow(2.0 * order + 1.0, -1.0 / 6.0));
        } else if (i == 1) {
            z -= s2 * 1.14 * std::pow(static_cast<double>(order), 0.426) / (z / s2);
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * found[0];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * found[1];
        } else {
            z = 2.0 * z - found[i - 2];
        }
        for (int it = 0; it < 200; ++it) {
            double pm, pm1;
            hermite_eval(order, z, pm, pm1);
            const double dp = std::sqrt(static_cast<double>(order)) * pm1;
            const double dz = pm / dp;
            z -= dz;
            if (std::abs(dz) < 1e-15 * (1.0 + std::abs(z))) break;
        }
        found.push_back(z);
    }
    for (int i = 0; i < half; ++i) {
        const double x = found[i];
        // Christoffel number: w = 1 / sum_{k<order} p_k(x)^2.
        double pprev = 0.0, p = 1.0, sum = 1.0;
        for (int k = 0; k < order - 1; ++k) {
            const double pnext = (x * p - std::sqrt(static_cast<double>(k)) * pprev) / std::sqrt(k + 1.0);
            pprev = p;
            p = pnext;
            sum += p * p;
        }
        const double w = 1.0 / sum;
        r.nodes[i] = x;
        r.weights[i] = w;
        r.nodes[order - 1 - i] = -x;
        r.weights[order - 1 - i] = w;
    }
    if (order % 2 == 1) r.nodes[half - 1] = 0.0;
    // ascending node order
    for (int i = 0; i < order / 2; ++i) {
        std::swap(r.nodes[i], r.nodes[order - 1 - i]);
        std::swap(r.weights[i], r.weights[order - 1 - i]);
    }
    return r;
}

std::uint64_t tensor_node_count(int order, int dims) {
    std::uint64_t n = 1;
    for (int k = 0; k < dims; ++k) {
        if (n > (1ull << 62) / static_cast<std::uint64_t>(order))
            throw std::invalid_argument("tensor_node_count: node count overflow");
        n *= static_cast<std::uint64_t>(order);
    }
    return n;
}

namespace {

// Sequential sweep with the leading index fixed; accumulates into sums.
void sweep_fixed_lead(const QuadratureRule& rule, int dims, int lead,
                      const std::function<void(std::span<const double>, std::span<double>)>& F,
                      std::vector<double>& sums) {
    const int m = rule.order;
    std::vector<double> coords(dims), vals(sums.size());
    std::vector<int> idx(dims, 0);
    coords[0] = rule.nodes[lead];
    const double w0 = rule.weights[lead];
    if (dims == 1) {
        F(coords, vals);
        for (std::size_t j = 0; j < sums.size(); ++j) sums[j] += w0 * vals[j];
        return;
    }
    for (;;) {
        double w = w0;
        for (int k = 1; k < dims; ++k) {
            coords[k] = rule.nodes[idx[k]];
            w *= rule.weights[idx[k]];
        }
        F(coords, vals);
        for (std::size_t j = 0; j < sums.size(); ++j) sums[j] += w * vals[j];
        int k = dims - 1;
        while (k >= 1 && ++idx[k] == m) {
            idx[k] = 0;
            --k;
        }
        if (k == 0) break;
    }
}

} // namespace

void tensor_expectation(const QuadratureRule& rule, int dims,
                        const std::function<void(std::span<const double>, std::span<double>)>& F,
                        std::span<double> out, int workers) {
    if (dims < 1) throw std::invalid_argument("tensor_expectation: dims must be >= 1");
    tensor_node_count(rule.order, dims);
    std::fill(out.begin(), out.end(), 0.0);
    const int m = rule.order;

    if (workers <= 1) {
        std::vector<double> sums(out.size(), 0.0);
        for (int lead = 0; lead < m; ++lead) {
            std::vector<double> part(out.size(), 0.0);
            sweep_fixed_lead(rule, dims, lead, F, part);
            for (std::size_t j = 0; j < sums.size(); ++j) sums[j] += part[j];
        }
        std::copy(sums.begin(), sums.end(), out.begin());
        return;
    }

    // F must be safe to call concurrently (per-thread workspaces).
    std::vector<std::future<std::vector<double>>> parts(m);
    for (int lead = 0; lead < m; ++lead)
        parts[lead] = std::async(std::launch::async, [&, lead]() {
            std::vector<double> p(out.size(), 0.0);
            sweep_fixed_lead(rule, dims, lead, F, p);
            return p;
        });
    // fold in leading-index order: identical bytes for any worker count
    for (int lead = 0; lead < m; ++lead) {
        const auto p = parts[lead].get();
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += p[j];
    }
}

double quad_expectation(const QuadratureRule& rule, int dims,
                        const std::function<double(std::span<const double>)>& F) {
    double result = 0.0;
    bool bad = false;
    tensor_expectation(rule, dims,
                       [&](std::span<const double> c, std::span<double> v) {
                           const double y = F(c);
                           if (!std::isfinite(y)) bad = true;
                           v[0] = y;
                       },
                       std::span<double>(&result, 1));
    if (bad) throw std::domain_error("quad_expectation: functional not finite at a quadrature node");
    return result;
}

} // namespace kpzlab
