#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "divprox/numerics.hpp"
#include "testutil.hpp"

using namespace divprox::numerics;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double cauchy_pdf(double a, double y) {
    return a / (std::numbers::pi * (a * a + y * y));
}
}  // namespace

TEST_CASE("nelder_mead: convex quadratic") {
    const double c[3] = {1.0, -2.0, 0.5};
    auto f = [&](std::span<const double> x) {
        double s = 0.0;
        for (int i = 0; i < 3; ++i) s += (x[i] - c[i]) * (x[i] - c[i]);
        return s;
    };
    const double x0[3] = {5.0, 5.0, 5.0};
    OptimizerOptions opt;
    const MinResult r = nelder_mead(f, std::span<const double>(x0, 3), opt);
    for (int i = 0; i < 3; ++i) CHECK(testutil::close(r.x[i], c[i], 1e-4));
    CHECK(r.f <= f(std::span<const double>(x0, 3)));  // descent guarantee
}

TEST_CASE("nelder_mead: Rosenbrock from (-1.2, 1)") {
    auto f = [](std::span<const double> x) {
        const double a = 1.0 - x[0];
        const double b = x[1] - x[0] * x[0];
        return a * a + 100.0 * b * b;
    };
    const double x0[2] = {-1.2, 1.0};
    OptimizerOptions opt;
    opt.max_evals = 5000;
    const MinResult r = nelder_mead(f, std::span<const double>(x0, 2), opt);
    CHECK(r.f < 1e-6);
}

TEST_CASE("nelder_mead: constant objective terminates by f tolerance") {
    auto f = [](std::span<const double>) { return 3.5; };
    const double x0[2] = {0.4, -0.7};
    const MinResult r = nelder_mead(f, std::span<const double>(x0, 2), {});
    CHECK(r.converged);
    CHECK(r.f == 3.5);
    CHECK(r.evals < 100);
}

TEST_CASE("nelder_mead: non-finite start throws") {
    auto f = [](std::span<const double>) { return kInf; };
    const double x0[2] = {0.0, 0.0};
    CHECK_THROWS_AS(nelder_mead(f, std::span<const double>(x0, 2), {}),
                    std::domain_error);
}

TEST_CASE("brent_min basics") {
    OptimizerOptions opt;
    opt.x_tolerance = 1e-10;
    const BrentResult r1 = brent_min([](double x) { return (x - 2.0) * (x - 2.0); },
                                     0.0, 5.0, opt);
    CHECK(testutil::close(r1.x, 2.0, 1e-8));
    const BrentResult r2 =
        brent_min([](double x) { return -std::sin(x); }, 0.0, std::numbers::pi, opt);
    CHECK(testutil::close(r2.x, std::numbers::pi / 2.0, 1e-6));
}

TEST_CASE("integrate: exponential tail") {
    const IntegralResult r = integrate(
        std::function<double(double)>([](double x) { return std::exp(-x); }),
        Interval{0.0, kInf}, {});
    CHECK(r.ok());
    CHECK(testutil::close(r.value, 1.0, 1e-10));
}

TEST_CASE("integrate: Cauchy density ratio has the closed form (a^2+b^2)/(2ab)") {
    auto check_pair = [](double a, double b) {
        const IntegralResult r = integrate(
            std::function<double(double)>([=](double y) {
                const double pb = cauchy_pdf(b, y);
                return pb * pb / cauchy_pdf(a, y);
            }),
            Interval{-kInf, kInf}, {});
        REQUIRE(r.ok());
        CHECK(testutil::close(r.value, (a * a + b * b) / (2.0 * a * b), 1e-6));
    };
    check_pair(1.0, 2.0);  // 1.25
    check_pair(0.2, 5.0);
    check_pair(3.7, 0.4);
}

TEST_CASE("integrate: squared standard normal") {
    const IntegralResult r = integrate(
        std::function<double(double)>([](double x) {
            const double g = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
            return g * g;
        }),
        Interval{-kInf, kInf}, {});
    CHECK(r.ok());
    CHECK(testutil::close(r.value, 1.0 / (2.0 * std::sqrt(std::numbers::pi)), 1e-8));
}

TEST_CASE("integrate: linearity on smooth test functions") {
    auto f = [](double x) { return std::exp(-x * x); };
    auto g = [](double x) { return std::cos(x) * std::exp(-0.3 * x * x); };
    const double al = 2.3, be = -1.7;
    const Interval iv{-9.0, 9.0};
    const double If = integrate(std::function<double(double)>(f), iv, {}).value;
    const double Ig = integrate(std::function<double(double)>(g), iv, {}).value;
    const double Ifg = integrate(std::function<double(double)>(
                                     [&](double x) { return al * f(x) + be * g(x); }),
                                 iv, {})
                           .value;
    CHECK(testutil::close(Ifg, al * If + be * Ig, 1e-8));
}

TEST_CASE("integrate: unbounded agrees with truncated for decaying integrands") {
    auto f = [](double x) { return std::exp(-0.5 * x * x) * (1.0 + x * x); };
    const double full =
        integrate(std::function<double(double)>(f), Interval{-kInf, kInf}, {}).value;
    const double trunc =
        integrate(std::function<double(double)>(f), Interval{-40.0, 40.0}, {}).value;
    CHECK(testutil::close(full, trunc, 1e-6));
}

TEST_CASE("integrate: reports divergence instead of a silent number") {
    const IntegralResult r = integrate(
        std::function<double(double)>([](double x) { return std::exp(x); }),
        Interval{0.0, kInf}, {});
    CHECK(!r.ok());
    CHECK((r.status == QuadStatus::divergent || r.status == QuadStatus::non_finite));
}

TEST_CASE("integrate: kink-heavy integrand needs the subdivision budget") {
    // |sin(40 x)| over one period block: exact value known
    auto f = [](double x) { return std::abs(std::sin(40.0 * x)); };
    QuadratureOptions opt;
    opt.max_subdivisions = 2000;
    const IntegralResult r =
        integrate(std::function<double(double)>(f), Interval{0.0, std::numbers::pi}, opt);
    CHECK(r.ok());
    CHECK(testutil::close(r.value, 2.0, 1e-6));
}

TEST_CASE("gauss_legendre nodes integrate polynomials exactly") {
    std::span<const double> x, w;
    gauss_legendre(20, x, w);
    REQUIRE(x.size() == 20);
    double s0 = 0.0, s2 = 0.0, s38 = 0.0;
    for (std::size_t i = 0; i < 20; ++i) {
        s0 += w[i];
        s2 += w[i] * x[i] * x[i];
        s38 += w[i] * std::pow(x[i], 38);
    }
    CHECK(testutil::close(s0, 2.0, 1e-13));
    CHECK(testutil::close(s2, 2.0 / 3.0, 1e-13));
    CHECK(testutil::close(s38, 2.0 / 39.0, 1e-12));
}
