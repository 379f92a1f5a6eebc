#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "divprox/proximal.hpp"
#include "testutil.hpp"

using namespace divprox;
using namespace divprox::proximal;
using divprox::models::ModelSpec;
using divprox::models::ParamPoint;
using divprox::models::RngStream;
using divprox::models::Sample;
using divprox::objectives::EstimatorSpec;

namespace {

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

AlgorithmSpec em_equivalent_algo() {
    AlgorithmSpec a;
    a.variant = Variant::one_step;
    a.psi = divergence::make_kl_psi();
    a.outer_opt = {6000, 1e-11, 1e-16, 0.1};
    a.polish_restarts = 3;
    a.stop = {0.0, 0.0, 50};  // run the full horizon
    return a;
}

void check_monotone(const IterateTrace& tr) {
    for (std::size_t k = 1; k < tr.objective_values.size(); ++k) {
        CHECK(tr.objective_values[k] <= tr.objective_values[k - 1] + 1e-8);
        CHECK(tr.objective_values[k] <= tr.objective_values[0] + 1e-8);
    }
}

}  // namespace

TEST_CASE("closed-form EM: equal starting means collapse to the sample mean") {
    const ModelSpec g = ModelSpec::gauss_mix2();
    const Sample s = seeded_sample(g, pp(g, {0.35, 2.0, 1.5}), 80, 21);
    double ybar = 0.0;
    for (double y : s.y) ybar += y;
    ybar /= 80.0;
    AlgorithmSpec a;
    a.variant = Variant::closed_form_em;
    a.stop.max_iters = 1;
    const IterateTrace tr = closed_form_em(g, s, pp(g, {0.4, 0.7, 0.7}), a);
    REQUIRE(tr.points.size() >= 2);
    CHECK(testutil::close(tr.points[1].weights[0], 0.4, 1e-13));
    CHECK(testutil::close(tr.points[1].component_params[0], ybar, 1e-12));
    CHECK(testutil::close(tr.points[1].component_params[1], ybar, 1e-12));
}

TEST_CASE("closed-form EM: likelihood ascent and fixed point") {
    const ModelSpec g = ModelSpec::gauss_mix2();
    const Sample s = seeded_sample(g, pp(g, {0.35, 2.0, 1.5}), 100, 22);
    AlgorithmSpec a;
    a.variant = Variant::closed_form_em;
    a.stop = {1e-12, 1e-14, 2000};
    const IterateTrace tr = closed_form_em(g, s, pp(g, {0.32, 2.2, 1.4}), a);
    check_monotone(tr);

    // one more sweep from the converged point barely moves
    AlgorithmSpec one = a;
    one.stop.max_iters = 1;
    const IterateTrace again = closed_form_em(g, s, tr.final_point(), one);
    CHECK(again.step_norms.back() < 1e-9);
}

TEST_CASE("one-step run from a stationary point stops immediately") {
    const ModelSpec g = ModelSpec::gauss_mix2();
    const Sample s = seeded_sample(g, pp(g, {0.35, 2.0, 1.5}), 100, 23);
    AlgorithmSpec em;
    em.variant = Variant::closed_form_em;
    em.stop = {1e-13, 0.0, 5000};
    const IterateTrace fixed = closed_form_em(g, s, pp(g, {0.32, 2.2, 1.4}), em);

    const IterateTrace tr = one_step_run(g, EstimatorSpec::log_likelihood(), s,
                                         fixed.final_point(), em_equivalent_algo());
    CHECK(tr.iterations() <= 2);
    if (!tr.step_norms.empty()) CHECK(tr.step_norms.back() < 1e-6);
}

TEST_CASE("one-step with the modified-KL kernel reproduces the EM iterates") {
    const ModelSpec g = ModelSpec::gauss_mix2();
    const ParamPoint truth = pp(g, {0.35, 2.0, 1.5});
    AlgorithmSpec em;
    em.variant = Variant::closed_form_em;
    em.stop = {0.0, 0.0, 20};

    for (std::uint64_t seed : {31, 32, 33}) {
        const Sample s = seeded_sample(g, truth, 60, seed);
        const ParamPoint phi0 = pp(g, {0.45, 2.4, 1.1});
        AlgorithmSpec prox = em_equivalent_algo();
        prox.stop.max_iters = 20;
        const IterateTrace a = closed_form_em(g, s, phi0, em);
        const IterateTrace b = one_step_run(g, EstimatorSpec::log_likelihood(), s,
                                            phi0, prox);
        REQUIRE(a.points.size() == 21);
        REQUIRE(b.points.size() == 21);
        double dev = 0.0;
        for (std::size_t k = 0; k < a.points.size(); ++k) {
            const std::vector<double> fa = a.points[k].flat(), fb = b.points[k].flat();
            for (int j = 0; j < 3; ++j) dev = std::max(dev, std::abs(fa[j] - fb[j]));
        }
        CHECK(dev <= 1e-8);
    }
}

TEST_CASE("one-step monotone decrease for the kernel dual and the mdpd") {
    const ModelSpec g = ModelSpec::gauss_mix2();
    const ParamPoint truth = pp(g, {0.35, 2.0, 1.5});
    const Sample s = seeded_sample(g, truth, 100, 41);
    AlgorithmSpec algo;
    algo.stop = {1e-5, 1e-8, 60};

    const IterateTrace t1 = one_step_run(
        g, EstimatorSpec::kernel_dual(0.5, {kde::KernelKind::gaussian, {}}), s,
        pp(g, {0.3, 2.3, 1.2}), algo);
    CHECK(t1.termination != Termination::failure);
    CHECK(t1.points.size() >= 2);
    check_monotone(t1);

    const IterateTrace t2 =
        one_step_run(g, EstimatorSpec::mdpd(0.5), s, pp(g, {0.3, 2.3, 1.2}), algo);
    CHECK(t2.termination != Termination::failure);
    check_monotone(t2);

    const IterateTrace t3 = one_step_run(g, EstimatorSpec::classical_dual(0.5), s,
                                         pp(g, {0.3, 2.3, 1.2}), algo);
    CHECK(t3.termination != Termination::failure);
    check_monotone(t3);
}

TEST_CASE("two-step: per-iteration stage chain and a no-increase first step") {
    const ModelSpec g = ModelSpec::gauss_mix2();
    const ParamPoint truth = pp(g, {0.35, 2.0, 1.5});
    const Sample s = seeded_sample(g, truth, 100, 43);
    AlgorithmSpec algo;
    algo.stop = {1e-5, 1e-8, 40};
    const IterateTrace tr = two_step_run(g, EstimatorSpec::kernel_dual(
                                                0.5, {kde::KernelKind::gaussian, {}}),
                                         s, pp(g, {0.25, 2.4, 1.1}), algo);
    CHECK(tr.termination != Termination::failure);
    check_monotone(tr);
    REQUIRE(tr.lambda_stage.size() == tr.points.size() - 1);
    for (std::size_t k = 0; k < tr.lambda_stage.size(); ++k) {
        CHECK(tr.theta_stage[k] <= tr.lambda_stage[k] + 1e-8);
        CHECK(tr.lambda_stage[k] <= tr.objective_values[k] + 1e-8);
    }
}

TEST_CASE("two-step with theta at the optimum cannot increase the composite") {
    const ModelSpec g = ModelSpec::gauss_mix2();
    const ParamPoint truth = pp(g, {0.35, 2.0, 1.5});
    const Sample s = seeded_sample(g, truth, 80, 44);
    AlgorithmSpec algo;
    algo.stop = {1e-6, 1e-9, 1};
    const IterateTrace tr = two_step_run(g, EstimatorSpec::mdpd(0.5), s,
                                         pp(g, {0.5, 2.0, 1.5}), algo);
    CHECK(tr.termination != Termination::failure);
    if (tr.points.size() > 1)
        CHECK(tr.objective_values[1] <= tr.objective_values[0] + 1e-8);
}

TEST_CASE("cauchy one-step: vanishing steps under the identifiable proximal term") {
    const ModelSpec c = ModelSpec::cauchy_scale();
    const Sample s = table1_cauchy();
    AlgorithmSpec algo;
    algo.outer_opt = {2000, 1e-10, 1e-15, 0.1};
    algo.stop = {1e-6, 0.0, 100};
    const IterateTrace tr = one_step_run(c, EstimatorSpec::classical_dual(2.0), s,
                                         pp(c, {2.0}), algo);
    CHECK(tr.termination == Termination::param_tol);
    CHECK(tr.step_norms.back() < 1e-5);
    check_monotone(tr);
}

TEST_CASE("initialization checks") {
    const ModelSpec g = ModelSpec::gauss_mix2();
    const ParamPoint truth = pp(g, {0.35, 2.0, 1.5});
    const Sample s = seeded_sample(g, truth, 100, 51);

    SUBCASE("gaussian likelihood condition holds at the truth") {
        const InitCheck c =
            check_initialization(g, EstimatorSpec::log_likelihood(), s, truth);
        CHECK(c.ok);
        CHECK(c.margin > 0.0);
        CHECK(c.condition == "gauss-loglik-single-component");
    }
    SUBCASE("classical dual needs no condition") {
        const InitCheck c =
            check_initialization(g, EstimatorSpec::classical_dual(0.5), s, truth);
        CHECK(c.ok);
        CHECK(c.condition == "compact-parameter-box");
    }
    SUBCASE("mdpd condition holds at the truth") {
        const InitCheck c = check_initialization(g, EstimatorSpec::mdpd(0.5), s, truth);
        CHECK(c.ok);
        CHECK(c.margin > 0.0);
    }
    SUBCASE("kernel dual condition holds at the truth") {
        const InitCheck c = check_initialization(
            g, EstimatorSpec::kernel_dual(0.5, {kde::KernelKind::gaussian, {}}), s,
            truth);
        CHECK(c.ok);
    }
    SUBCASE("weibull pathological observation flips the likelihood condition") {
        const ModelSpec w = ModelSpec::weibull_mix2();
        const ParamPoint tw = pp(w, {0.35, 0.5, 3.0});
        Sample sw = seeded_sample(w, tw, 50, 52);
        const InitCheck ok_check =
            check_initialization(w, EstimatorSpec::log_likelihood(), sw, tw);
        CHECK(ok_check.ok);
        sw.y[7] = 0.5;  // sits exactly at the first component's scale point
        const InitCheck c =
            check_initialization(w, EstimatorSpec::log_likelihood(), sw, tw);
        CHECK(!c.ok);
        CHECK(c.condition == "pathological-observation-at-scale-point");
    }
    SUBCASE("cauchy is always level-bounded") {
        const ModelSpec c = ModelSpec::cauchy_scale();
        const InitCheck r = check_initialization(c, EstimatorSpec::classical_dual(2.0),
                                                 table1_cauchy(), pp(c, {1.0}));
        CHECK(r.ok);
    }
}

TEST_CASE("trace CSV carries one row per iterate plus the termination line") {
    const ModelSpec g = ModelSpec::gauss_mix2();
    const Sample s = seeded_sample(g, pp(g, {0.35, 2.0, 1.5}), 60, 61);
    AlgorithmSpec a;
    a.variant = Variant::closed_form_em;
    a.stop.max_iters = 5;
    const IterateTrace tr = closed_form_em(g, s, pp(g, {0.3, 2.4, 1.2}), a);
    std::stringstream ss;
    tr.to_csv(ss);
    std::string line;
    std::size_t rows = 0;
    bool has_header = false, has_termination = false;
    while (std::getline(ss, line)) {
        if (line.rfind("iter,", 0) == 0) has_header = true;
        else if (line.rfind("# termination=", 0) == 0) has_termination = true;
        else if (!line.empty()) ++rows;
    }
    CHECK(has_header);
    CHECK(has_termination);
    CHECK(rows == tr.points.size());
}
