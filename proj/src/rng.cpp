#include "kpzlab/rng.hpp"

#include <cmath>

namespace kpzlab {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& ctr, std::uint32_t k0, std::uint32_t k1) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
}

// 53-bit uniform strictly inside (0,1); safe as a log/Box-Muller argument.
inline double to_unit(std::uint64_t v) {
    return (static_cast<double>(v >> 11) + 0.5) * 0x1.0p-53;
}

} // namespace

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

GaussianStream::GaussianStream(std::uint64_t seed, std::uint64_t replica_id)
    : seed_(seed), replica_(replica_id) {
    const std::uint64_t k = splitmix64(seed);
    key0_ = static_cast<std::uint32_t>(k);
    key1_ = static_cast<std::uint32_t>(k >> 32);
}

std::array<std::uint32_t, 4> GaussianStream::block(std::uint64_t index) const {
    std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(index),
        static_cast<std::uint32_t>(index >> 32),
        static_cast<std::uint32_t>(replica_),
        static_cast<std::uint32_t>(replica_ >> 32),
    };
    std::uint32_t k0 = key0_, k1 = key1_;
    for (int r = 0; r < 10; ++r) {
        philox_round(ctr, k0, k1);
        k0 += kPhiloxW0;
        k1 += kPhiloxW1;
    }
    return ctr;
}

double GaussianStream::uniform_at(std::uint64_t index) const {
    const auto b = block(index);
    return to_unit((static_cast<std::uint64_t>(b[0]) << 32) | b[1]);
}

double GaussianStream::gaussian_at(std::uint64_t index) const {
    const auto b = block(index);
    const double u1 = to_unit((static_cast<std::uint64_t>(b[0]) << 32) | b[1]);
    const double u2 = to_unit((static_cast<std::uint64_t>(b[2]) << 32) | b[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

std::uint64_t GaussianStream::u64_at(std::uint64_t index) const {
    const auto b = block(index);
    return (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
}

std::uint64_t GaussianStream::bounded_at(std::uint64_t& index, std::uint64_t bound) const {
    // Lemire 2019, unbiased multiply-shift.
    for (;;) {
        const std::uint64_t x = u64_at(index++);
        const unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
        const std::uint64_t lo = static_cast<std::uint64_t>(m);
        if (lo >= bound || lo >= (-bound) % bound) return static_cast<std::uint64_t>(m >> 64);
    }
}

} // namespace kpzlab
