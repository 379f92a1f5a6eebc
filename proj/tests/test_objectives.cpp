#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "divprox/divergence.hpp"
#include "divprox/objectives.hpp"
#include "testutil.hpp"

using namespace divprox;
using namespace divprox::objectives;
using divprox::models::ModelSpec;
using divprox::models::ParamPoint;
using divprox::models::RngStream;
using divprox::models::Sample;
using divprox::numerics::Interval;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

ParamPoint pp(const ModelSpec& m, std::initializer_list<double> v) {
    return ParamPoint::from_flat(m, std::vector<double>(v));
}

Sample seeded_sample(const ModelSpec& m, const ParamPoint& truth, std::size_t n,
                     std::uint64_t seed) {
    RngStream rng(seed);
    return models::sample(m, truth, n, rng);
}

Sample table1_cauchy() {
    Sample s;
    s.y = {0.534, -18.197, 0.726, -0.439, -1.945, 0.0119, 12.376, -0.953, 0.698, 0.818};
    return s;
}
}  // namespace

TEST_CASE("dual_inner vanishes exactly at alpha = phi") {
    const ModelSpec g = ModelSpec::gauss_mix2();
    const ParamPoint p = pp(g, {0.35, 2.0, 1.5});
    const Sample s = seeded_sample(g, p, 50, 1);
    CHECK(dual_inner(g, p, p, s, 0.5, {}) == 0.0);
    CHECK(dual_inner(g, p, p, s, 2.0, {}) == 0.0);

    const ModelSpec w = ModelSpec::weibull_mix2();
    const ParamPoint pw = pp(w, {0.35, 0.5, 3.0});
    const Sample sw = seeded_sample(w, pw, 50, 2);
    CHECK(dual_inner(w, pw, pw, sw, 0.5, {}) == 0.0);

    const ModelSpec c = ModelSpec::cauchy_scale();
    const ParamPoint pc = pp(c, {1.0});
    CHECK(testutil::close(dual_inner(c, pc, pc, table1_cauchy(), 2.0, {}), 0.0, 1e-15));
}

TEST_CASE("dual_inner at gamma = 0 is the mean log-likelihood gap") {
    const ModelSpec g = ModelSpec::gauss_mix2();
    const ParamPoint phi = pp(g, {0.35, 2.0, 1.5});
    const ParamPoint alpha = pp(g, {0.5, 1.0, 2.5});
    const Sample s = seeded_sample(g, phi, 40, 3);
    const double expect = (log_likelihood(g, alpha, s) - log_likelihood(g, phi, s)) /
                          static_cast<double>(s.size());
    CHECK(testutil::close(dual_inner(g, phi, alpha, s, 0.0, {}), expect, 1e-9));
}

TEST_CASE("dual_inner matches a dense Riemann oracle (Gaussian, Hellinger)") {
    const ModelSpec g = ModelSpec::gauss_mix2();
    const ParamPoint phi = pp(g, {0.4, 1.8, 1.2});
    const ParamPoint alpha = pp(g, {0.3, 2.2, 1.0});
    const Sample s = seeded_sample(g, phi, 50, 4);
    const double gamma = 0.5;

    auto integrand = [&](double x) {
        const double p = models::density(g, phi, x);
        const double q = models::density(g, alpha, x);
        return divergence::cressie_read_phi_prime(gamma, p / q) * p;
    };
    double oracle = testutil::riemann(integrand, -14.0, 16.0, 3'000'000);
    double mean_sharp = 0.0;
    for (double y : s.y) {
        const double r = models::density(g, phi, y) / models::density(g, alpha, y);
        mean_sharp += divergence::cressie_read_phi_sharp(gamma, r);
    }
    oracle -= mean_sharp / static_cast<double>(s.size());
    CHECK(testutil::close(dual_inner(g, phi, alpha, s, gamma, {}), oracle, 1e-5));
}

TEST_CASE("cauchy Pearson inner function: closed form against quadrature") {
    const ModelSpec c = ModelSpec::cauchy_scale();
    const Sample s = table1_cauchy();
    const double a = 0.9, b = 1.7;
    const ParamPoint pa = pp(c, {a}), pb = pp(c, {b});

    const double closed = dual_inner(c, pa, pb, s, 2.0, {});
    // generic route: integral term by quadrature plus the sample mean
    const auto ir = numerics::integrate(
        std::function<double(double)>([&](double x) {
            const double p = models::density(c, pa, x);
            const double q = models::density(c, pb, x);
            return (p / q - 1.0) * p;
        }),
        Interval{-kInf, kInf}, {});
    REQUIRE(ir.ok());
    double mean_sharp = 0.0;
    for (double y : s.y) {
        const double r = models::density(c, pa, y) / models::density(c, pb, y);
        mean_sharp += 0.5 * (r * r - 1.0);
    }
    const double generic = ir.value - mean_sharp / 10.0;
    CHECK(testutil::close(closed, generic, 1e-6));
    // and the explicit coefficient (a^2+b^2)/(2ab)
    const double braced = (a * a + b * b) / (2.0 * a * b) - 1.0 - mean_sharp / 10.0;
    CHECK(testutil::close(closed, braced, 1e-12));
}

TEST_CASE("classical_dual_estimate is nonnegative when alpha = phi is feasible") {
    const ModelSpec g = ModelSpec::gauss_mix2();
    const ParamPoint phi = pp(g, {0.35, 2.0, 1.5});
    const Sample s = seeded_sample(g, phi, 60, 5);
    const EstimatorSpec spec = EstimatorSpec::classical_dual(0.5);
    const ObjectiveValue v = classical_dual_estimate(g, phi, s, 0.5, spec);
    CHECK(v.usable());
    CHECK(v.value >= -1e-6);
    CHECK(v.inner_argmax.has_value());
}

TEST_CASE("classical_dual_estimate matches a grid oracle on the Cauchy fixture") {
    const ModelSpec c = ModelSpec::cauchy_scale();
    const Sample s = table1_cauchy();
    const ParamPoint pa = pp(c, {1.0});
    EstimatorSpec spec = EstimatorSpec::classical_dual(2.0);
    spec.inner_lo = {0.01};
    spec.inner_hi = {10.0 * 18.197};
    const ObjectiveValue v = classical_dual_estimate(c, pa, s, 2.0, spec);
    REQUIRE(v.usable());

    double best = -kInf;
    const int grid = 20000;
    for (int i = 0; i <= grid; ++i) {
        const double b = 0.01 + (181.97 - 0.01) * i / grid;
        best = std::max(best, dual_inner(c, pa, pp(c, {b}), s, 2.0, {}));
    }
    CHECK(testutil::close(v.value, best, 1e-4));
    CHECK(v.value >= best - 1e-9);  // optimizer refines on top of any grid point
}

TEST_CASE("gamma = 0 classical dual selects the likelihood argmax on a grid") {
    const ModelSpec g = ModelSpec::gauss_mix2();
    const ParamPoint truth = pp(g, {0.35, 2.0, 1.5});
    const Sample s = seeded_sample(g, truth, 40, 6);
    const EstimatorSpec spec = EstimatorSpec::classical_dual(0.0);

    double best_dual = kInf, best_lik = -kInf;
    int arg_dual = -1, arg_lik = -1;
    int idx = 0;
    for (double lam : {0.2, 0.5, 0.8})
        for (double m1 : {0.5, 1.5, 2.5})
            for (double m2 : {1.0, 2.0, 3.0}) {
                const ParamPoint p = pp(g, {lam, m1, m2});
                const double dv = classical_dual_estimate(g, p, s, 0.0, spec).value;
                const double lv = log_likelihood(g, p, s);
                if (dv < best_dual) {
                    best_dual = dv;
                    arg_dual = idx;
                }
                if (lv > best_lik) {
                    best_lik = lv;
                    arg_lik = idx;
                }
                ++idx;
            }
    CHECK(arg_dual == arg_lik);
}

TEST_CASE("kernel dual vanishes when the estimate equals the model density") {
    const ModelSpec g = ModelSpec::gauss_mix2();
    const ParamPoint phi = pp(g, {0.35, 2.0, 1.5});
    const Sample s = seeded_sample(g, phi, 80, 7);
    const DensityFn inject = [&](std::span<const double> xs, std::span<double> out) {
        models::density_batch(g, phi, xs, out);
    };
    const ObjectiveValue v =
        kernel_dual_with_estimate(g, phi, s, 0.5, inject, {-10.0, 13.0}, {});
    REQUIRE(v.usable());
    CHECK(std::abs(v.value) <= 1e-12);
}

TEST_CASE("kernel dual matches a dense Riemann oracle (Gaussian, Hellinger)") {
    const ModelSpec g = ModelSpec::gauss_mix2();
    const ParamPoint phi = pp(g, {0.3, 2.3, 1.4});
    const ParamPoint truth = pp(g, {0.35, 2.0, 1.5});
    const Sample s = seeded_sample(g, truth, 100, 8);
    const kde::Kde k(s, {kde::KernelKind::gaussian, std::nullopt});
    const ObjectiveValue v = kernel_dual_estimate(g, phi, s, 0.5, k, {});
    REQUIRE(v.usable());

    const double qlo = models::quantile(g, phi, 1e-5);
    const double qhi = models::quantile(g, phi, 1.0 - 1e-5);
    auto integrand = [&](double x) {
        const double p = models::density(g, phi, x);
        return divergence::cressie_read_phi_prime(0.5, p / k(x)) * p;
    };
    double oracle = testutil::riemann(integrand, qlo, qhi, 2'000'000);
    double mean_sharp = 0.0;
    for (double y : s.y)
        mean_sharp +=
            divergence::cressie_read_phi_sharp(0.5, models::density(g, phi, y) / k(y));
    oracle -= mean_sharp / 100.0;
    CHECK(testutil::close(v.value, oracle, 1e-5));
}

TEST_CASE("admissibility walls") {
    const ModelSpec w = ModelSpec::weibull_mix2();
    const ModelSpec g = ModelSpec::gauss_mix2();
    const kde::KernelSpec gauss_k{kde::KernelKind::gaussian, 0.3};
    const kde::KernelSpec epan_k{kde::KernelKind::epanechnikov, 0.3};
    const kde::KernelSpec cauchy_k{kde::KernelKind::cauchy, 0.3};

    // supremal form on the Weibull mixture: rejected beyond gamma = 1
    CHECK(!check_admissible(w, EstimatorSpec::classical_dual(2.0)).ok);
    CHECK(!check_admissible(w, EstimatorSpec::classical_dual(1.5)).ok);
    CHECK(check_admissible(w, EstimatorSpec::classical_dual(0.5)).ok);
    CHECK(check_admissible(w, EstimatorSpec::classical_dual(-1.0)).ok);
    CHECK(check_admissible(g, EstimatorSpec::classical_dual(2.0)).ok);

    const ParamPoint low = pp(w, {0.35, 0.5, 1.8});   // both shapes < 2
    const ParamPoint mixed = pp(w, {0.35, 0.5, 3.0}); // min < 2 <= max
    const ParamPoint high = pp(w, {0.35, 2.5, 3.0});  // both shapes > 2

    // gamma > 1 with a Gaussian kernel needs min shape > 2
    CHECK(!check_admissible_at(w, EstimatorSpec::kernel_dual(2.0, gauss_k), mixed).ok);
    CHECK(check_admissible_at(w, EstimatorSpec::kernel_dual(2.0, gauss_k), high).ok);
    // a heavier-tailed kernel lifts that restriction
    CHECK(check_admissible_at(w, EstimatorSpec::kernel_dual(2.0, cauchy_k), mixed).ok);

    // gamma in (0,1): no restriction
    CHECK(check_admissible_at(w, EstimatorSpec::kernel_dual(0.5, gauss_k), mixed).ok);

    // gamma < 0 with a Gaussian kernel: min shape < 1 - 1/gamma and max < 2
    CHECK(check_admissible_at(w, EstimatorSpec::kernel_dual(-1.0, gauss_k), low).ok);
    CHECK(!check_admissible_at(w, EstimatorSpec::kernel_dual(-1.0, gauss_k), mixed).ok);
    CHECK(!check_admissible_at(w, EstimatorSpec::kernel_dual(-1.0, gauss_k), high).ok);
    // Epanechnikov relaxes the max-shape condition
    CHECK(check_admissible_at(w, EstimatorSpec::kernel_dual(-1.0, epan_k), mixed).ok);
    CHECK(!check_admissible_at(w, EstimatorSpec::kernel_dual(-1.0, epan_k), high).ok);

    // the operation raises an explicit domain error
    const Sample s = seeded_sample(w, mixed, 30, 9);
    const kde::Kde k(s, epan_k);
    CHECK_THROWS_AS(kernel_dual_estimate(w, high, s, -1.0, k, {}), std::domain_error);
}

TEST_CASE("mdpd: Gaussian power integral and the L2 bridge") {
    const ModelSpec g = ModelSpec::gauss_mix2();
    const ParamPoint single = pp(g, {0.5, 0.0, 0.0});  // a single standard normal
    const Sample s = seeded_sample(g, single, 50, 10);

    const ObjectiveValue v1 = mdpd_objective(g, single, s, 1.0, {});
    REQUIRE(v1.usable());
    double mean_p = 0.0;
    for (double y : s.y) mean_p += models::density(g, single, y);
    mean_p /= 50.0;
    const double integral_term = v1.value + 2.0 * mean_p;
    CHECK(testutil::close(integral_term, 1.0 / (2.0 * std::sqrt(std::numbers::pi)),
                          1e-8));

    // a = 1 equals the L2 objective
    const ParamPoint other = pp(g, {0.35, 2.0, 1.5});
    const ObjectiveValue v2 = mdpd_objective(g, other, s, 1.0, {});
    const auto ir = numerics::integrate(
        std::function<double(double)>([&](double x) {
            const double p = models::density(g, other, x);
            return p * p;
        }),
        Interval{-kInf, kInf}, {});
    double mean_po = 0.0;
    for (double y : s.y) mean_po += models::density(g, other, y);
    mean_po /= 50.0;
    CHECK(testutil::close(v2.value, ir.value - 2.0 * mean_po, 1e-8));
}

TEST_CASE("full density power divergence vanishes at f = g") {
    const ModelSpec g = ModelSpec::gauss_mix2();
    const ParamPoint p = pp(g, {0.4, 1.0, -0.5});
    const double a = 0.7;
    const auto ir = numerics::integrate(
        std::function<double(double)>([&](double x) {
            const double f = models::density(g, p, x);
            const double fa = std::pow(f, a);
            return f * fa - (a + 1.0) / a * f * fa + (1.0 / a) * f * fa;
        }),
        Interval{-kInf, kInf}, {});
    REQUIRE(ir.ok());
    CHECK(testutil::close(ir.value, 0.0, 1e-10));
}

TEST_CASE("mdpd near a = 0 points at the likelihood maximizer") {
    const ModelSpec g = ModelSpec::gauss_mix2();
    const ParamPoint truth = pp(g, {0.35, 2.0, 1.5});
    const Sample s = seeded_sample(g, truth, 100, 11);

    numerics::OptimizerOptions opt{4000, 1e-9, 1e-14, 0.1};
    auto mdpd_obj = [&](std::span<const double> x) {
        const ParamPoint p = models::feasible_project(g, x);
        return mdpd_objective(g, p, s, 0.01, {}).value;
    };
    auto nll = [&](std::span<const double> x) {
        const ParamPoint p = models::feasible_project(g, x);
        return -log_likelihood(g, p, s);
    };
    const std::vector<double> x0 = truth.flat();
    const auto r1 = numerics::nelder_mead(mdpd_obj, x0, opt);
    const auto r2 = numerics::nelder_mead(nll, x0, opt);
    double dist = 0.0;
    for (int i = 0; i < 3; ++i) dist = std::max(dist, std::abs(r1.x[i] - r2.x[i]));
    CHECK(dist < 0.05);
}

TEST_CASE("mdpd Weibull origin wall") {
    const ModelSpec w = ModelSpec::weibull_mix2();
    const Sample s = seeded_sample(w, pp(w, {0.35, 0.5, 3.0}), 30, 12);
    const ObjectiveValue v = mdpd_objective(w, pp(w, {0.35, 0.2, 3.0}), s, 0.5, {});
    CHECK(std::isinf(v.value));
    CHECK(v.value > 0.0);
    const ObjectiveValue ok = mdpd_objective(w, pp(w, {0.35, 0.5, 3.0}), s, 0.5, {});
    CHECK(ok.usable());
}

TEST_CASE("log likelihood values") {
    const ModelSpec g = ModelSpec::gauss_mix2();
    const ParamPoint degen = pp(g, {0.5, 1.3, 1.3});
    Sample one;
    one.y = {1.3};
    CHECK(testutil::close(log_likelihood(g, degen, one),
                          std::log(1.0 / std::sqrt(2.0 * std::numbers::pi)), 1e-13));
    Sample rep;
    rep.y.assign(17, 1.3);
    CHECK(testutil::close(log_likelihood(g, degen, rep),
                          17.0 * log_likelihood(g, degen, one), 1e-11));
    const Sample s = seeded_sample(g, pp(g, {0.35, 2.0, 1.5}), 200, 13);
    double direct = 0.0;
    for (double y : s.y) direct += std::log(models::density(g, pp(g, {0.35, 2.0, 1.5}), y));
    CHECK(testutil::close(log_likelihood(g, pp(g, {0.35, 2.0, 1.5}), s), direct, 1e-10));
}

namespace {
double matched_weight(double lam, double mu1, double mu2, double shift) {
    const double rhs = std::log((1.0 - lam) / lam) +
                       0.5 * (mu1 * mu1 - mu2 * mu2) -
                       0.5 * ((mu1 + shift) * (mu1 + shift) -
                              (mu2 + shift) * (mu2 + shift));
    return 1.0 / (1.0 + std::exp(rhs));
}
}  // namespace

TEST_CASE("proximal term: zeros, the degenerate manifold, and positivity") {
    const divergence::ProximalSpec psi = divergence::make_default_psi();
    const ModelSpec g = ModelSpec::gauss_mix2();
    const ParamPoint p = pp(g, {0.35, 2.0, 1.5});
    const Sample s = seeded_sample(g, p, 60, 14);
    CHECK(proximal_term(g, p, p, s, psi, {}) == 0.0);

    const ModelSpec w = ModelSpec::weibull_mix2();
    const ParamPoint pw = pp(w, {0.35, 0.5, 3.0});
    const Sample sw = seeded_sample(w, pw, 60, 15);
    CHECK(proximal_term(w, pw, pw, sw, psi, {}) == 0.0);

    const ModelSpec c = ModelSpec::cauchy_scale();
    const ParamPoint pc = pp(c, {1.0});
    const Sample sc = table1_cauchy();
    CHECK(testutil::close(proximal_term(c, pc, pc, sc, psi, {}), 0.0, 1e-12));
    CHECK(proximal_term(c, pp(c, {1.4}), pc, sc, psi, {}) > 1e-4);

    // matched-posterior pair: lambda' solves the two-equation system
    const ParamPoint a = pp(g, {2.0 / 3.0, 0.0, 1.0});
    const ParamPoint b = pp(g, {matched_weight(2.0 / 3.0, 0.0, 1.0, 0.5), 0.5, 1.5});
    CHECK(proximal_term(g, b, a, s, psi, {}) <= 1e-12);
    CHECK(proximal_term(g, pp(g, {0.5, 0.5, 1.5}), a, s, psi, {}) > 1e-6);
}

TEST_CASE("proximal gradient: finite differences and manifold zeros") {
    const divergence::ProximalSpec psi = divergence::make_default_psi();
    const ModelSpec g = ModelSpec::gauss_mix2();
    const Sample s = seeded_sample(g, pp(g, {0.35, 2.0, 1.5}), 40, 16);
    testutil::Uniform u(8);
    for (int rep = 0; rep < 10; ++rep) {
        const ParamPoint prev = pp(g, {u(0.2, 0.8), u(-1.0, 3.0), u(-1.0, 3.0)});
        const std::vector<double> x = {u(0.2, 0.8), u(-1.0, 3.0), u(-1.0, 3.0)};
        const auto f = [&](const std::vector<double>& v) {
            return proximal_term(g, ParamPoint::from_flat(g, v), prev, s, psi, {});
        };
        const std::vector<double> num = testutil::fdiff_grad(f, x, 1e-5);
        const std::vector<double> got =
            proximal_term_gradient(g, ParamPoint::from_flat(g, x), prev, s, psi, {});
        for (int j = 0; j < 3; ++j)
            CHECK(testutil::close_rel(got[j], num[j], 1e-4, 1e-7));
    }
    // zero vector at phi = prev and on the matched-posterior pair
    const ParamPoint p0 = pp(g, {0.4, 1.0, 2.0});
    for (double v : proximal_term_gradient(g, p0, p0, s, psi, {})) CHECK(v == 0.0);
    const ParamPoint a = pp(g, {2.0 / 3.0, 0.0, 1.0});
    const ParamPoint b = pp(g, {matched_weight(2.0 / 3.0, 0.0, 1.0, 0.5), 0.5, 1.5});
    for (double v : proximal_term_gradient(g, b, a, s, psi, {}))
        CHECK(std::abs(v) < 1e-10);

    // cauchy: gradient against finite differences
    const ModelSpec c = ModelSpec::cauchy_scale();
    const Sample sc = table1_cauchy();
    const ParamPoint prevc = pp(c, {1.1});
    const auto fc = [&](const std::vector<double>& v) {
        return proximal_term(c, ParamPoint::from_flat(c, v), prevc, sc, psi, {});
    };
    const double num = testutil::fdiff_grad(fc, {0.8}, 1e-5)[0];
    const double got = proximal_term_gradient(c, pp(c, {0.8}), prevc, sc, psi, {})[0];
    CHECK(testutil::close_rel(got, num, 1e-4, 1e-7));
}

TEST_CASE("objective wrapper: likelihood scaling and kernel bandwidth resolution") {
    const ModelSpec g = ModelSpec::gauss_mix2();
    const ParamPoint p = pp(g, {0.35, 2.0, 1.5});
    const Sample s = seeded_sample(g, p, 50, 17);
    Objective mle(g, EstimatorSpec::log_likelihood(), s);
    CHECK(testutil::close(mle.eval(p).value,
                          -log_likelihood(g, p, s) / 50.0, 1e-12));
    Objective kd(g, EstimatorSpec::kernel_dual(0.5, {kde::KernelKind::gaussian, {}}), s);
    REQUIRE(kd.kernel_estimate() != nullptr);
    CHECK(kd.kernel_estimate()->bandwidth() > 0.0);
    CHECK(kd.eval(p).usable());
}
