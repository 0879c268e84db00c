#include <doctest.h>

#include <cmath>

#include "kpzlab/ensemble.hpp"
#include "kpzlab/oracle.hpp"

using namespace kpzlab;

TEST_SUITE_BEGIN("oracle");

TEST_CASE("gauss-hermite rule in probabilists' normalization") {
    for (int m : {1, 2, 5, 8, 20, 40}) {
        const QuadratureRule r = gauss_hermite_rule(m);
        double ws = 0.0;
        for (double w : r.weights) ws += w;
        CHECK(std::abs(ws - 1.0) <= 1e-14);
    }
    const QuadratureRule r = gauss_hermite_rule(12);
    // exact moments of N(0,1) up to degree 2m-1
    auto moment = [&](int k) {
        double s = 0.0;
        for (int i = 0; i < r.order; ++i) s += r.weights[i] * std::pow(r.nodes[i], k);
        return s;
    };
    CHECK(std::abs(moment(1)) < 1e-15);
    CHECK(std::abs(moment(2) - 1.0) < 1e-13);
    CHECK(std::abs(moment(4) - 3.0) < 1e-12);
    CHECK(std::abs(moment(6) - 15.0) < 1e-11);
    CHECK(std::abs(moment(8) - 105.0) < 1e-10);
}

TEST_CASE("tensor expectation basics") {
    const QuadratureRule r2 = gauss_hermite_rule(2);
    CHECK(quad_expectation(r2, 3, [](std::span<const double> g) { return g[0] * g[0]; }) ==
          doctest::Approx(1.0).epsilon(1e-13));
    const QuadratureRule r20 = gauss_hermite_rule(20);
    const double mgf = quad_expectation(r20, 2, [](std::span<const double> g) { return std::exp(0.5 * g[0]); });
    CHECK(std::abs(mgf - std::exp(0.125)) / std::exp(0.125) <= 1e-8);
    CHECK(quad_expectation(r20, 1, [](std::span<const double>) { return 1.0; }) ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(quad_expectation(r2, 1,
                                     [](std::span<const double> g) { return std::log(g[0]); }),
                    std::domain_error);
}

TEST_CASE("parallel tensor sweeps reproduce the serial fold bit-exactly") {
    const QuadratureRule r = gauss_hermite_rule(9);
    auto F = [](std::span<const double> c, std::span<double> out) {
        out[0] = std::exp(0.3 * c[0] - 0.2 * c[1] + 0.1 * c[2] * c[1]);
        out[1] = c[0] * c[2];
    };
    std::vector<double> serial(2), parallel(2);
    tensor_expectation(r, 3, F, serial, 1);
    tensor_expectation(r, 3, F, parallel, 4);
    CHECK(serial[0] == parallel[0]);
    CHECK(serial[1] == parallel[1]);
}

TEST_CASE("tiny-system dimension accounting") {
    const TinySystem sys = default_tiny_system();
    CHECK(sys.dimension() == 5);
    const auto labels = sys.dim_labels();
    CHECK(labels.size() == 5);
    CHECK(labels[0].kind == DimLabel::Kind::environment);
    CHECK(labels[3].kind == DimLabel::Kind::increment);
    TinySystem big = sys;
    big.grid.half_width = 3;   // d = 13
    CHECK_THROWS_AS(big.validate(), std::invalid_argument);
}

TEST_CASE("exact identity checks pass at order 20 for both schemes") {
    for (NoiseScheme scheme : {NoiseScheme::exponential, NoiseScheme::clipped_euler}) {
        const TinySystem sys = default_tiny_system(scheme);
        const QuadratureRule rule = gauss_hermite_rule(20);
        const CenterMoments cm = compute_center_moments(sys, rule);
        CHECK(check_item1_exact(sys, cm).pass);
        CHECK(check_lemma_variance(sys, cm).pass);
        const OracleCheck sym = check_endpoint_symmetry(sys, cm);
        CHECK(sym.pass);
        CHECK(sym.residual <= 1e-10);
    }
}

TEST_CASE("item-1 residual decreases monotonically in the order") {
    const TinySystem sys = default_tiny_system();
    double prev = std::numeric_limits<double>::infinity();
    for (int m : {8, 12, 16, 20}) {
        const double r = check_item1_exact(sys, gauss_hermite_rule(m)).residual;
        CHECK(r <= prev + 1e-10);
        prev = r;
    }
    CHECK(prev <= 1e-8);
}

TEST_CASE("integration by parts") {
    const QuadratureRule rule = gauss_hermite_rule(20);
    TestFunction phi;
    phi.dx = 1.0;
    phi.lo = 0;
    phi.values = {1.0, -0.7};
    SUBCASE("passes at both probe sites for both schemes") {
        for (NoiseScheme scheme : {NoiseScheme::exponential, NoiseScheme::clipped_euler}) {
            const TinySystem sys = default_tiny_system(scheme);
            CHECK(check_integration_by_parts(sys, rule, phi, 0).pass);
            CHECK(check_integration_by_parts(sys, rule, phi, 1).pass);
        }
    }
    SUBCASE("sigma = 0 makes both sides vanish") {
        TinySystem sys = default_tiny_system();
        sys.sigma = 0.0;
        const OracleCheck c = check_integration_by_parts(sys, gauss_hermite_rule(8), phi, 0);
        CHECK(std::abs(c.detail.at("lhs")) <= 1e-12);
        CHECK(std::abs(c.detail.at("rhs")) <= 1e-12);
    }
    SUBCASE("corrupted derivative is detected") {
        const TinySystem sys = default_tiny_system();
        CHECK_FALSE(check_integration_by_parts(sys, rule, phi, 1, 1e-8, true).pass);
    }
}

TEST_CASE("derivative formula on the tiny system") {
    const TinySystem sys = default_tiny_system();
    const OracleCheck c = check_derivative_formula(sys, 100);
    CHECK(c.pass);
    CHECK(c.residual <= 1e-6);
    CHECK_FALSE(check_derivative_formula(sys, 10, 20240901, 1e-6, true).pass);
}

TEST_CASE("two-point identity with the matched discrete pair") {
    Item2System sys;
    sys.phi1.dx = 1.0;
    sys.phi1.lo = -1;
    sys.phi1.values = {0.5, 1.0, 0.5};
    sys.phi2_amplitude = 0.8;
    SUBCASE("quadrature-exact at order 20, both schemes") {
        for (NoiseScheme scheme : {NoiseScheme::exponential, NoiseScheme::clipped_euler}) {
            sys.scheme = scheme;
            const OracleCheck c = check_item2_exact(sys, gauss_hermite_rule(20), 1e-8, 2);
            CHECK(c.pass);
            CHECK(c.detail.at("lhs") != 0.0);
        }
    }
    SUBCASE("bespoke functional agrees with the production-pipeline reference") {
        sys.scheme = NoiseScheme::exponential;
        const QuadratureRule r5 = gauss_hermite_rule(5);
        const double fast = check_item2_exact(sys, r5, 1e30).detail.at("lhs");
        const double ref = item2_lhs_reference(sys, r5);
        CHECK(fast == doctest::Approx(ref).epsilon(1e-11));
    }
    SUBCASE("phi1 support restriction is enforced") {
        Item2System wide = sys;
        wide.phi1.lo = -2;
        wide.phi1.values = {0.1, 0.5, 1.0, 0.5, 0.1};
        CHECK_THROWS_AS(check_item2_exact(wide, gauss_hermite_rule(4)), std::invalid_argument);
    }
}

TEST_CASE("monte carlo on the tiny lattice agrees with the quadrature oracle") {
    const TinySystem sys = default_tiny_system();
    const CenterMoments cm = compute_center_moments(sys, gauss_hermite_rule(24));

    EnsembleConfig c;
    c.manifest.seed = 2024;
    c.manifest.sigma = sys.sigma;
    c.manifest.grid = sys.grid;
    c.replicas = 1000000;
    c.workers = 2;
    c.probe_sites = {0};
    const ObservablePlan plan(c);
    const EnsembleMoments m = run_ensemble(plan).finalize();

    const auto g0 = variance_function(m, plan, 0);
    CHECK(std::abs(g0.value - cm.var_delta) <= 4.0 * g0.std_error);

    const auto cdf0 = endpoint_cdf(m, plan, 0);
    CHECK(std::abs(cdf0.value - cm.cdf(0)) <= 4.0 * cdf0.std_error);
    const auto cdfm1 = endpoint_cdf(m, plan, -1);
    CHECK(std::abs(cdfm1.value - cm.cdf(-1)) <= 4.0 * cdfm1.std_error);

    const auto ay = m.mean_estimate(plan.slot_abs_y());
    double quad_ay = 0.0;
    for (const auto& [site, p] : cm.mass) quad_ay += p * std::abs(site) * sys.grid.dx;
    CHECK(std::abs(ay.value - quad_ay) <= 4.0 * ay.std_error);
}

TEST_CASE("full oracle report") {
    const OracleReport rep = run_oracle_checks(NoiseScheme::exponential, 16, false, 2);
    CHECK(rep.all_pass());
    CHECK(rep.order == 16);
    CHECK(rep.nodes_item1 == 1048576);
    CHECK(rep.wall_seconds > 0.0);
    const OracleReport bad = run_oracle_checks(NoiseScheme::exponential, 12, true, 2);
    CHECK_FALSE(bad.all_pass());
}

TEST_SUITE_END();
