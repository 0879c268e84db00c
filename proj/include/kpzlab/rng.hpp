#ifndef KPZLAB_RNG_HPP
#define KPZLAB_RNG_HPP

#include <array>
#include <cstdint>

namespace kpzlab {

// Counter-based Gaussian stream built on Philox4x32-10 (Salmon et al.,
// SC 2011). The key is derived from the seed; the 128-bit counter is
// (replica_id << 64) | draw_index, so distinct replicas are disjoint
// counter blocks of one keyed random function. Every draw is a pure
// function of (seed, replica_id, index): random access, no state, safe
// to share across threads.
class GaussianStream {
public:
    GaussianStream() = default;
    GaussianStream(std::uint64_t seed, std::uint64_t replica_id);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t replica_id() const { return replica_; }

    // k-th 128-bit Philox block as four 32-bit words.
    std::array<std::uint32_t, 4> block(std::uint64_t index) const;

    // k-th uniform in (0,1), from the high 64 bits of block k.
    double uniform_at(std::uint64_t index) const;

    // k-th standard Gaussian (Box-Muller cosine branch; one block per draw).
    double gaussian_at(std::uint64_t index) const;

    // k-th uniform 64-bit integer.
    std::uint64_t u64_at(std::uint64_t index) const;

    // Uniform integer in [0, bound) via Lemire's multiply-shift rejection.
    // Advances through as many indices as it rejects; returns the value and
    // the next unused index through `index`.
    std::uint64_t bounded_at(std::uint64_t& index, std::uint64_t bound) const;

private:
    std::uint64_t seed_ = 0;
    std::uint64_t replica_ = 0;
    std::uint32_t key0_ = 0, key1_ = 0;
};

// Sequential facade over GaussianStream for call sites that just want
// "the next Gaussian". Copyable value type; the cursor is the only state.
class StreamCursor {
public:
    explicit StreamCursor(GaussianStream s, std::uint64_t start = 0)
        : stream_(s), pos_(start) {}
    double next_gaussian() { return stream_.gaussian_at(pos_++); }
    std::uint64_t next_u64() { return stream_.u64_at(pos_++); }
    std::uint64_t position() const { return pos_; }
    const GaussianStream& stream() const { return stream_; }

private:
    GaussianStream stream_;
    std::uint64_t pos_ = 0;
};

inline GaussianStream make_stream(std::uint64_t seed, std::uint64_t replica_id) {
    return GaussianStream(seed, replica_id);
}

std::uint64_t splitmix64(std::uint64_t x);

} // namespace kpzlab

#endif
