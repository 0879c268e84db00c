#include <doctest.h>

#include <cmath>

#include "kpzlab/environment.hpp"
#include "kpzlab/test_function.hpp"

using namespace kpzlab;

TEST_SUITE_BEGIN("field");

namespace {
GridSpec grid_of(int L, double dx) {
    GridSpec g;
    g.dx = dx;
    g.dt = dx * dx / 2;
    g.half_width = L;
    g.n_steps = 1;
    return g;
}
} // namespace

TEST_CASE("signed indicator branches") {
    CHECK(indicator_one_y(2, 1) == 1);
    CHECK(indicator_one_y(2, 2) == 1);
    CHECK(indicator_one_y(2, 3) == 0);
    CHECK(indicator_one_y(0, 0) == 0);
    CHECK(indicator_one_y(0, 5) == 0);
    CHECK(indicator_one_y(-2, 0) == -1);
    CHECK(indicator_one_y(-2, -1) == -1);
    CHECK(indicator_one_y(-2, -2) == 0);
    CHECK(indicator_one_y(-2, 1) == 0);
}

TEST_CASE("indicator reconstructs the walk exactly") {
    const GridSpec g = grid_of(7, 0.4);
    for (int r = 0; r < 25; ++r) {
        const InitialCondition init = sample_initial_walk(make_stream(44, r), g, 1.0);
        const double sq = std::sqrt(g.dx);
        for (int y = -7; y <= 7; ++y) {
            double s = 0.0;
            for (int u = -6; u <= 7; ++u) s += indicator_one_y(y, u) * init.eta[g.cell_to_idx(u)];
            CHECK(init.w[g.site_to_idx(y)] == doctest::Approx(sq * s).epsilon(1e-12));
        }
    }
}

TEST_CASE("primitive of the unit box is the clamped ramp") {
    const double dx = 0.1;
    const TestFunction box = box_function(dx, 0.0, 1.0, 1.0);
    const PrimitiveFunction psi = primitive(box);
    CHECK(psi.at(0) == 0.0);
    for (int j = -20; j <= 25; ++j) {
        const double x = j * dx;
        const double exact = x <= 0 ? 0.0 : std::min(x, 1.0);
        CHECK(std::abs(psi.at(j) - exact) <= dx);
    }
    const TestFunction zero = box_function(dx, 0.0, 1.0, 0.0);
    const PrimitiveFunction zpsi = primitive(zero);
    for (int j = -15; j <= 15; ++j) CHECK(zpsi.at(j) == 0.0);
}

TEST_CASE("derivative") {
    const double dx = 0.1;
    SUBCASE("linear functions differentiate exactly") {
        TestFunction lin;
        lin.dx = dx;
        lin.lo = -10;
        lin.values.resize(21);
        for (int j = -10; j <= 10; ++j) lin.values[j + 10] = j * dx;
        const TestFunction d = derivative(lin);
        for (int j = -9; j <= 9; ++j) CHECK(d.at(j) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("derivative of primitive recovers phi within one-cell smoothing") {
        const TestFunction phi = triangle_function(dx, 0.3, 0.8, 1.0);
        const PrimitiveFunction psi = primitive(phi);
        // psi as a gridded function, then central difference
        const double max_slope = 1.0 / 0.8;
        for (int j = phi.lo; j <= phi.hi(); ++j) {
            const double dpsi = (psi.at(j + 1) - psi.at(j - 1)) / (2 * dx);
            CHECK(std::abs(dpsi - phi.at(j)) <= dx * max_slope + 1e-12);
        }
    }
}

TEST_CASE("cross correlation") {
    const double dx = 0.1;
    const TestFunction box = box_function(dx, 0.0, 1.0, 1.0);
    SUBCASE("box autocorrelation peaks at 1 in the middle") {
        const TestFunction cc = cross_correlate(box, box);
        CHECK(cc.at(0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(cc.at(5) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(cc.at(-5) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(cc.at(10) == 0.0);
        // symmetry of the autocorrelation
        for (int u = -9; u <= 9; ++u) CHECK(cc.at(u) == doctest::Approx(cc.at(-u)).epsilon(1e-12));
    }
    SUBCASE("zero function gives the zero correlation") {
        const TestFunction zero = box_function(dx, 0.0, 1.0, 0.0);
        const TestFunction cc = cross_correlate(zero, box);
        CHECK(cc.is_zero());
    }
    SUBCASE("value at zero shift is the inner product") {
        const TestFunction tri = triangle_function(dx, 0.5, 0.5, 2.0);
        const TestFunction cc = cross_correlate(tri, box);
        double ip = 0.0;
        for (int j = tri.lo; j <= tri.hi(); ++j) ip += tri.at(j) * box.at(j) * dx;
        CHECK(cc.at(0) == doctest::Approx(ip).epsilon(1e-12));
    }
}

TEST_CASE("l2 norm") {
    const double dx = 0.1;
    const TestFunction zero = box_function(dx, 0.0, 1.0, 0.0);
    CHECK(l2_norm(zero) == 0.0);
    const TestFunction box = box_function(dx, 0.0, 1.0, 1.0);
    CHECK(l2_norm(box) == doctest::Approx(1.0).epsilon(1e-12));
    TestFunction scaled = box;
    for (double& v : scaled.values) v *= -2.5;
    CHECK(l2_norm(scaled) == doctest::Approx(2.5 * l2_norm(box)).epsilon(1e-12));
}

TEST_CASE("smeared slope") {
    const double dx = 0.1;
    const GridSpec g = grid_of(30, dx);
    const TestFunction phi = triangle_function(dx, 0.0, 1.0, 1.0);
    SUBCASE("constant height gives zero") {
        HeightField h;
        h.grid = g;
        for (int j = -30; j <= 30; ++j) {
            h.sites.push_back(j);
            h.h.push_back(3.7);
        }
        CHECK(std::abs(smeared_slope(h, phi)) < 1e-14);
    }
    SUBCASE("linear height integrates phi") {
        HeightField h;
        h.grid = g;
        for (int j = -30; j <= 30; ++j) {
            h.sites.push_back(j);
            h.h.push_back(g.position(j));
        }
        double mass = 0.0;
        for (int j = phi.lo; j <= phi.hi(); ++j) mass += phi.at(j) * dx;
        CHECK(smeared_slope(h, phi) == doctest::Approx(mass).epsilon(1e-12));
    }
    SUBCASE("gaussian isometry at t = 0") {
        const int n = 100000;
        const double sigma = 1.2;
        double s = 0, s2 = 0;
        for (int r = 0; r < n; ++r) {
            const InitialCondition init = sample_initial_walk(make_stream(52, r), g, sigma);
            HeightField h;
            h.grid = g;
            for (int j = -30; j <= 30; ++j) {
                h.sites.push_back(j);
                h.h.push_back(sigma * init.w[g.site_to_idx(j)]);
            }
            const double x = smeared_slope(h, phi);
            s += x;
            s2 += x * x;
        }
        const double var = s2 / n - (s / n) * (s / n);
        const double expect = sigma * sigma * l2_norm(phi) * l2_norm(phi);
        CHECK(std::abs(var - expect) < 3.0 * expect * std::sqrt(2.0 / n));
    }
    SUBCASE("margin violation raises") {
        const TestFunction wide = triangle_function(dx, 2.8, 0.5, 1.0);
        GridSpec tight = grid_of(30, dx);
        HeightField h;
        h.grid = tight;
        for (int j = -30; j <= 30; ++j) {
            h.sites.push_back(j);
            h.h.push_back(0.0);
        }
        CHECK_THROWS_AS(smeared_slope(h, wide), std::invalid_argument);
    }
}

TEST_CASE("eta-form and smear-form of X_0 agree exactly") {
    const double dx = 0.2;
    const GridSpec g = grid_of(20, dx);
    const TestFunction phi = triangle_function(dx, 0.4, 1.0, 0.8);
    const double sigma = 1.1;
    for (int r = 0; r < 30; ++r) {
        const InitialCondition init = sample_initial_walk(make_stream(53, r), g, sigma);
        HeightField h0;
        h0.grid = g;
        for (int j = -20; j <= 20; ++j) {
            h0.sites.push_back(j);
            h0.h.push_back(sigma * init.w[g.site_to_idx(j)]);
        }
        const double smear = smeared_slope(h0, phi);
        double eta_form = 0.0;
        for (int u = -19; u <= 20; ++u)
            eta_form += phi.cell_average(u) * init.eta[g.cell_to_idx(u)];
        eta_form *= sigma * std::sqrt(dx);
        CHECK(smear == doctest::Approx(eta_form).epsilon(1e-10));
    }
}

TEST_CASE("discrete summation by parts") {
    const double dx = 0.1;
    const TestFunction phi1 = triangle_function(dx, 0.0, 0.7, 1.0);
    const TestFunction phi2 = bump_function(dx, 0.5, 0.6, 1.5);
    const TestFunction d2 = derivative(phi2);
    const PrimitiveFunction psi1 = primitive(phi1);
    SUBCASE("matched pair is exact: sum phi2' psi1(.+u) dx = -(phi2 * S phi1)(u)") {
        const TestFunction sphi1 = smooth121(phi1);
        const TestFunction rhs = cross_correlate(phi2, sphi1);
        for (int u = -25; u <= 25; ++u) {
            double lhs = 0.0;
            for (int z = d2.lo; z <= d2.hi(); ++z) lhs += d2.at(z) * psi1.at(z + u) * dx;
            CHECK(lhs == doctest::Approx(-rhs.at(u)).epsilon(1e-10).scale(1.0));
        }
    }
    SUBCASE("unsmoothed pairing differs by at most the discretization bound") {
        const TestFunction rhs = cross_correlate(phi2, phi1);
        // bound: dx * C with C from second differences of phi1
        double c = 0.0;
        for (int j = phi1.lo - 1; j <= phi1.hi() + 1; ++j)
            c = std::max(c, std::abs(phi1.at(j + 1) - 2 * phi1.at(j) + phi1.at(j - 1)) / (dx * dx));
        double l1_phi2 = 0.0;
        for (int z = phi2.lo; z <= phi2.hi(); ++z) l1_phi2 += std::abs(phi2.at(z)) * dx;
        const double bound = dx * dx * 0.25 * c * l1_phi2 + 1e-12;
        for (int u = -25; u <= 25; ++u) {
            double lhs = 0.0;
            for (int z = d2.lo; z <= d2.hi(); ++z) lhs += d2.at(z) * psi1.at(z + u) * dx;
            CHECK(std::abs(lhs + rhs.at(u)) <= bound);
        }
    }
}

TEST_CASE("named constructors cover the registry") {
    for (const char* shape : {"triangle", "bump", "box", "smoothed_box"}) {
        const TestFunction f = make_test_function(shape, 0.0, 2.0, 1.0, 0.1);
        CHECK(!f.values.empty());
        CHECK(l2_norm(f) > 0.0);
    }
    CHECK_THROWS_AS(make_test_function("pyramid", 0, 1, 1, 0.1), std::invalid_argument);
}

TEST_SUITE_END();
