#ifndef KPZLAB_GAUSS_HERMITE_HPP
#define KPZLAB_GAUSS_HERMITE_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace kpzlab {

// Gauss-Hermite rule in probabilists' normalization: integrates exactly
// against the standard normal density up to polynomial degree 2*order-1,
// and sum(weights) == 1 up to rounding.
struct QuadratureRule {
    int order = 0;
    std::vector<double> nodes;
    std::vector<double> weights;
};

QuadratureRule gauss_hermite_rule(int order);

// Tensor-product expectation over d i.i.d. N(0,1) coordinates. F fills
// `out` (size n_out) from the node coordinates; sums accumulate in node
// order, with per-leading-index partials folded in index order so the
// result is identical for any worker count.
void tensor_expectation(const QuadratureRule& rule, int dims,
                        const std::function<void(std::span<const double>, std::span<double>)>& F,
                        std::span<double> out, int workers = 1);

// Single-output convenience. Throws if F returns a non-finite value at a node.
double quad_expectation(const QuadratureRule& rule, int dims,
                        const std::function<double(std::span<const double>)>& F);

std::uint64_t tensor_node_count(int order, int dims);

} // namespace kpzlab

#endif
