#ifndef KPZLAB_NUMERICS_HPP
#define KPZLAB_NUMERICS_HPP

#include <cmath>
#include <limits>
#include <span>

namespace kpzlab {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Max-shifted log(sum exp(args)). -inf entries are skipped; returns -inf
// for an empty or all--inf input.
inline double log_sum_exp(std::span<const double> args) {
    double m = kNegInf;
    for (double a : args)
        if (a > m) m = a;
    if (m == kNegInf) return kNegInf;
    double s = 0.0;
    for (double a : args)
        if (a != kNegInf) s += std::exp(a - m);
    return m + std::log(s);
}

// log(sum exp(a[i] + b[i])) for paired spans.
inline double log_sum_exp2(std::span<const double> a, std::span<const double> b) {
    double m = kNegInf;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double v = a[i] + b[i];
        if (v > m) m = v;
    }
    if (m == kNegInf) return kNegInf;
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double v = a[i] + b[i];
        if (v != kNegInf) s += std::exp(v - m);
    }
    return m + std::log(s);
}

} // namespace kpzlab

#endif
