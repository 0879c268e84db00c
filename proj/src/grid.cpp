#include "kpzlab/grid.hpp"

#include <cmath>
#include <cstdio>

namespace kpzlab {

std::string GridSpec::validate() const {
    if (dx <= 0.0) throw std::invalid_argument("grid.dx must be > 0");
    if (dt <= 0.0) throw std::invalid_argument("grid.dt must be > 0");
    if (half_width < 0) throw std::invalid_argument("grid.half_width must be >= 0");
    if (n_steps < 0) throw std::invalid_argument("grid.n_steps must be >= 0");
    if (dt > dx * dx * (1.0 + 1e-12))
        throw std::invalid_argument("grid.dt must satisfy dt <= dx^2 (explicit scheme stability)");

    const int min_width = 4 * static_cast<int>(std::ceil(std::sqrt(n_steps * dt) / dx));
    if (half_width < min_width) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "grid.half_width=%d is below the 4*sqrt(t)/dx guideline (%d); "
                      "boundary mass loss may not be negligible",
                      half_width, min_width);
        return buf;
    }
    return {};
}

std::uint64_t manifest_hash(const Manifest& m) {
    // FNV-1a over a canonical rendering; stable across runs and platforms
    // with IEEE doubles.
    char buf[256];
    std::snprintf(buf, sizeof buf, "seed=%llu|gen=%s|dx=%.17g|dt=%.17g|L=%d|N=%d|sigma=%.17g",
                  static_cast<unsigned long long>(m.seed), m.generator_family_id.c_str(),
                  m.grid.dx, m.grid.dt, m.grid.half_width, m.grid.n_steps, m.sigma);
    std::uint64_t h = 14695981039346656037ull;
    for (const char* p = buf; *p; ++p) {
        h ^= static_cast<unsigned char>(*p);
        h *= 1099511628211ull;
    }
    return h;
}

std::string manifest_hash_hex(const Manifest& m) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(manifest_hash(m)));
    return buf;
}

} // namespace kpzlab
