#include <doctest.h>

#include <cmath>

#include "kpzlab/accumulator.hpp"
#include "kpzlab/rng.hpp"

using namespace kpzlab;

TEST_SUITE_BEGIN("accumulator");

namespace {

Manifest tiny_manifest() {
    Manifest m;
    m.seed = 1;
    m.grid.dx = 1.0;
    m.grid.dt = 0.5;
    m.grid.half_width = 1;
    m.grid.n_steps = 1;
    return m;
}

Observation make_obs(std::int64_t r) {
    // deterministic synthetic observation: core = (g, g^2), cells constant
    const GaussianStream s = make_stream(77, static_cast<std::uint64_t>(r));
    const double g = s.gaussian_at(0);
    Observation o;
    o.core = {g, g * g};
    o.mass = {0.25, 0.5, 0.25};
    o.cum = {0.25, 0.75, 1.0};
    o.smass = {0.25, 0.5, 0.25};
    return o;
}

EnsembleAccumulator accumulate_range(std::int64_t lo, std::int64_t hi) {
    EnsembleAccumulator acc(tiny_manifest(), 2, 3, false, 0);
    for (std::int64_t r = lo; r < hi; ++r) acc.add(r, make_obs(r));
    return acc;
}

} // namespace

TEST_CASE("block-aligned merge reproduces the single pass bit-exactly") {
    const std::int64_t n = 4 * EnsembleAccumulator::kBlockSize;
    const std::int64_t k = 2 * EnsembleAccumulator::kBlockSize;
    EnsembleAccumulator whole = accumulate_range(0, n);
    EnsembleAccumulator left = accumulate_range(0, k);
    const EnsembleAccumulator right = accumulate_range(k, n);
    left.merge(right);
    const EnsembleMoments a = whole.finalize(), b = left.finalize();
    CHECK(a.n == b.n);
    CHECK(a.core_sum == b.core_sum);
    CHECK(a.core_cross == b.core_cross);
    CHECK(a.mass_sum == b.mass_sum);
    CHECK(a.cum_sq == b.cum_sq);
}

TEST_CASE("merge is commutative and associative over disjoint block ranges") {
    const std::int64_t B = EnsembleAccumulator::kBlockSize;
    EnsembleAccumulator a = accumulate_range(0, B);
    const EnsembleAccumulator b = accumulate_range(B, 2 * B);
    const EnsembleAccumulator c = accumulate_range(2 * B, 3 * B);
    EnsembleAccumulator abc1 = accumulate_range(0, B);
    abc1.merge(b);
    abc1.merge(c);
    EnsembleAccumulator bc = accumulate_range(B, 2 * B);
    bc.merge(c);
    EnsembleAccumulator abc2 = accumulate_range(0, B);
    abc2.merge(bc);
    EnsembleAccumulator cba = accumulate_range(2 * B, 3 * B);
    cba.merge(accumulate_range(B, 2 * B));
    cba.merge(accumulate_range(0, B));
    const auto m1 = abc1.finalize(), m2 = abc2.finalize(), m3 = cba.finalize();
    CHECK(m1.core_sum == m2.core_sum);
    CHECK(m1.core_sum == m3.core_sum);
    CHECK(m1.core_cross == m2.core_cross);
    CHECK(m1.core_cross == m3.core_cross);
}

TEST_CASE("unaligned merge agrees to rounding (documented 64-replica granularity)") {
    const std::int64_t n = 200, k = 100;   // k is not a block multiple
    EnsembleAccumulator whole = accumulate_range(0, n);
    EnsembleAccumulator left = accumulate_range(0, k);
    left.merge(accumulate_range(k, n));
    const EnsembleMoments a = whole.finalize(), b = left.finalize();
    CHECK(a.n == b.n);
    for (std::size_t i = 0; i < a.core_sum.size(); ++i)
        CHECK(a.core_sum[i] == doctest::Approx(b.core_sum[i]).epsilon(1e-13));
}

TEST_CASE("manifest mismatch is rejected") {
    EnsembleAccumulator a = accumulate_range(0, 64);
    Manifest other = tiny_manifest();
    other.seed = 2;
    EnsembleAccumulator b(other, 2, 3, false, 0);
    b.add(64, make_obs(64));
    CHECK_THROWS_AS(a.merge(b), std::invalid_argument);
}

TEST_CASE("mean and variance estimates with sampling-theory errors") {
    const std::int64_t n = 64 * 700;
    const EnsembleMoments m = accumulate_range(0, n).finalize();
    const EstimateWithError mean = m.mean_estimate(0);
    CHECK(std::abs(mean.value) < 3.0 * mean.std_error);
    CHECK(mean.std_error == doctest::Approx(1.0 / std::sqrt(double(n))).epsilon(0.05));
    // delta-method variance of a standard normal sample: value 1, SE ~ sqrt(2/n)
    const double mu = m.mean(0);
    const double var = (m.core_sum[1] - n * mu * mu) / (n - 1);
    const std::pair<int, double> grad[] = {{0, -2.0 * mu}, {1, 1.0}};
    const EstimateWithError v = m.delta_estimate(var, grad);
    CHECK(std::abs(v.value - 1.0) < 3.0 * v.std_error);
    CHECK(v.std_error == doctest::Approx(std::sqrt(2.0 / n)).epsilon(0.1));
    CHECK(v.std_error >= 0.0);
}

TEST_CASE("single replica flags undefined errors") {
    const EnsembleMoments m = accumulate_range(0, 1).finalize();
    CHECK(m.n == 1);
    CHECK(std::isnan(m.mean_estimate(0).std_error));
}

TEST_SUITE_END();
