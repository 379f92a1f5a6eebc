#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "divprox/divergence.hpp"
#include "testutil.hpp"

using namespace divprox::divergence;

TEST_CASE("cressie_read_phi closed-form values") {
    CHECK(cressie_read_phi(2.0, 1.0) == 0.0);
    CHECK(testutil::close(cressie_read_phi(2.0, 3.0), 2.0, 1e-14));
    CHECK(testutil::close(cressie_read_phi(0.5, 4.0), 2.0, 1e-13));
    // direct evaluation of the defining expression at gamma = 0.5, t = 4
    const double direct = (std::sqrt(4.0) - 0.5 * 4.0 + 0.5 - 1.0) / (0.5 * -0.5);
    CHECK(testutil::close(cressie_read_phi(0.5, 4.0), direct, 1e-13));
    CHECK(std::isinf(cressie_read_phi(-1.0, 0.0)));
    CHECK(std::isinf(cressie_read_phi(0.0, 0.0)));
    CHECK(cressie_read_phi(1.0, 0.0) == 1.0);  // t log t -> 0
    CHECK_THROWS_AS(cressie_read_phi(2.0, -0.1), std::domain_error);
}

TEST_CASE("cressie_read_phi_prime values and finite differences") {
    CHECK(cressie_read_phi_prime(2.0, 1.0) == 0.0);
    CHECK(testutil::close(cressie_read_phi_prime(0.0, 2.0), 0.5, 1e-14));
    testutil::Uniform u(5);
    for (int i = 0; i < 200; ++i) {
        const double g = u(-2.0, 3.0);
        const double t = u(0.1, 8.0);
        const double fd = testutil::fdiff(
            [g](double s) { return cressie_read_phi(g, s); }, t, 1e-6);
        CHECK(testutil::close_rel(cressie_read_phi_prime(g, t), fd, 1e-6, 1e-8));
    }
}

TEST_CASE("cressie_read_phi_sharp equals t phi' - phi") {
    CHECK(cressie_read_phi_sharp(2.0, 1.0) == 0.0);
    CHECK(testutil::close(cressie_read_phi_sharp(2.0, 3.0), 4.0, 1e-13));
    testutil::Uniform u(9);
    for (int i = 0; i < 200; ++i) {
        const double g = u(-2.0, 3.0);
        const double t = u(0.05, 9.0);
        const double composed =
            t * cressie_read_phi_prime(g, t) - cressie_read_phi(g, t);
        CHECK(testutil::close_rel(cressie_read_phi_sharp(g, t), composed, 1e-10, 1e-12));
    }
}

TEST_CASE("nonnegativity with a zero only at t = 1") {
    testutil::Uniform u(17);
    for (int i = 0; i < 1000; ++i) {
        const double g = u(-2.0, 3.0);
        const double t = u(1e-6, 10.0);
        const double v = cressie_read_phi(g, t);
        CHECK(v >= 0.0);
        if (v <= 1e-12) CHECK(std::abs(t - 1.0) < 1e-5);
    }
    CHECK(cressie_read_phi(1.7, 1.0) == 0.0);
}

TEST_CASE("continuity in gamma at the logarithmic limits") {
    for (double t : {0.5, 2.0, 5.0}) {
        CHECK(testutil::close(cressie_read_phi(1.0 + 1e-6, t), cressie_read_phi(1.0, t), 1e-4));
        CHECK(testutil::close(cressie_read_phi(1.0 - 1e-6, t), cressie_read_phi(1.0, t), 1e-4));
        CHECK(testutil::close(cressie_read_phi(1e-6, t), cressie_read_phi(0.0, t), 1e-4));
        CHECK(testutil::close(cressie_read_phi(-1e-6, t), cressie_read_phi(0.0, t), 1e-4));
    }
}

TEST_CASE("default psi values") {
    CHECK(default_psi(1.0) == 0.0);
    CHECK(testutil::close(default_psi(4.0), 0.5, 1e-15));
    CHECK(testutil::close(default_psi(0.0), 0.5, 1e-15));
    CHECK(std::isinf(default_psi_prime(0.0)));
    CHECK(default_psi_prime(0.0) < 0.0);
    const double fd = testutil::fdiff([](double t) { return default_psi(t); }, 2.7, 1e-6);
    CHECK(testutil::close_rel(default_psi_prime(2.7), fd, 1e-6));
}

TEST_CASE("proximal kernel contract on a grid") {
    for (const ProximalSpec& spec : {make_default_psi(), make_kl_psi()}) {
        for (int i = 1; i <= 10000; ++i) {
            const double t = 100.0 * static_cast<double>(i) / 10000.0;
            const double v = spec.psi(t);
            CHECK(v >= 0.0);
            if (std::abs(t - 1.0) > 1e-9) {
                CHECK(v > 0.0);
                CHECK(spec.psi_prime(t) != 0.0);
            }
        }
        CHECK(spec.psi(1.0) == 0.0);
        CHECK(spec.psi_prime(1.0) == 0.0);
    }
}

TEST_CASE("divergence spec validation") {
    CHECK_THROWS(DivergenceSpec::dpd(0.0));
    CHECK_THROWS(DivergenceSpec::dpd(-1.0));
    CHECK_THROWS(DivergenceSpec::cressie_read(std::numeric_limits<double>::infinity()));
    CHECK(DivergenceSpec::cressie_read(0.5).gamma == 0.5);
}
