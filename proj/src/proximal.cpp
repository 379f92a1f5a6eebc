#include "divprox/proximal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "divprox/simd/simd.hpp"

namespace divprox::proximal {

using models::ModelKind;
using models::ModelSpec;
using models::ParamPoint;
using models::Sample;
using objectives::EstimatorSpec;
using objectives::Objective;
using objectives::ObjectiveValue;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double step_norm(const ParamPoint& a, const ParamPoint& b) {
    const std::vector<double> fa = a.flat(), fb = b.flat();
    double s = 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i) s += (fa[i] - fb[i]) * (fa[i] - fb[i]);
    return std::sqrt(s);
}
}  // namespace

const char* termination_name(Termination t) {
    switch (t) {
        case Termination::param_tol: return "param_tol";
        case Termination::objective_tol: return "objective_tol";
        case Termination::no_decrease: return "no_decrease";
        case Termination::max_iters: return "max_iters";
        case Termination::failure: return "failure";
    }
    return "?";
}

void IterateTrace::to_csv(std::ostream& os) const {
    const std::size_t d = points.empty() ? 0 : points.front().flat().size();
    os << "iter";
    for (std::size_t j = 0; j < d; ++j) os << ",p" << j;
    os << ",objective,proximal,step_norm\n";
    os.precision(17);
    for (std::size_t k = 0; k < points.size(); ++k) {
        os << k;
        for (double v : points[k].flat()) os << "," << v;
        os << "," << objective_values[k] << "," << proximal_values[k] << ","
           << step_norms[k] << "\n";
    }
    os << "# termination=" << termination_name(termination);
    if (!failure_reason.empty()) os << " reason=" << failure_reason;
    os << "\n";
}

// ---------------------------------------------------------------------------
// shared run machinery
// ---------------------------------------------------------------------------

namespace {

struct RunContext {
    const ModelSpec& m;
    const Sample& s;
    const AlgorithmSpec& algo;
    Objective obj;

    RunContext(const ModelSpec& m_, const EstimatorSpec& est, const Sample& s_,
               const AlgorithmSpec& algo_)
        : m(m_), s(s_), algo(algo_), obj(m_, with_inner_bounds(m_, est, s_), s_) {}

    // Data-driven inner-search cap for the Cauchy supremal form.
    static EstimatorSpec with_inner_bounds(const ModelSpec& m,
                                           const EstimatorSpec& est,
                                           const Sample& s) {
        EstimatorSpec e = est;
        if (m.kind == ModelKind::cauchy_scale &&
            est.kind == EstimatorSpec::Kind::classical_dual && e.inner_lo.empty()) {
            double ymax = 0.0;
            for (double y : s.y) ymax = std::max(ymax, std::abs(y));
            e.inner_lo = {m.comp_lo[0]};
            e.inner_hi = {std::min(m.comp_hi[0], 10.0 * ymax)};
        }
        return e;
    }

    double proximal(const ParamPoint& p, const ParamPoint& prev) const {
        return objectives::proximal_term(m, p, prev, s, algo.psi, algo.prox_quad);
    }

    // Composite objective on the flat vector; +inf on any evaluation trouble.
    double composite(std::span<const double> x, const ParamPoint& prev) const {
        try {
            const ParamPoint p = models::feasible_project(m, x);
            const ObjectiveValue v = obj.eval(p);
            if (!std::isfinite(v.value) || v.flagged) return kInf;
            const double d = proximal(p, prev);
            if (!std::isfinite(d)) return kInf;
            return v.value + d;
        } catch (const std::exception&) {
            return kInf;
        }
    }
};

void seed_trace(IterateTrace& tr, const ParamPoint& phi0, double v0) {
    tr.points = {phi0};
    tr.objective_values = {v0};
    tr.proximal_values = {0.0};
    tr.step_norms = {0.0};
}

void append_duplicate(IterateTrace& tr) {
    tr.points.push_back(tr.points.back());
    tr.objective_values.push_back(tr.objective_values.back());
    tr.proximal_values.push_back(0.0);
    tr.step_norms.push_back(0.0);
}

bool stop_after_step(IterateTrace& tr, const StopRule& stop, double decrease) {
    if (tr.step_norms.back() < stop.param_tol) {
        tr.termination = Termination::param_tol;
        return true;
    }
    if (decrease < stop.objective_tol) {
        tr.termination = Termination::objective_tol;
        return true;
    }
    return false;
}

// Nelder-Mead with a few shrinking restarts at the incumbent; the arginf of
// each proximal iteration wants more polish than one simplex pass gives.
numerics::MinResult polished_nm(const std::function<double(std::span<const double>)>& f,
                                std::span<const double> x0,
                                const numerics::OptimizerOptions& opt, int restarts) {
    numerics::MinResult best = numerics::nelder_mead(f, x0, opt);
    numerics::OptimizerOptions o = opt;
    for (int r = 0; r < restarts; ++r) {
        o.initial_simplex_scale *= 0.2;
        const numerics::MinResult again = numerics::nelder_mead(f, best.x, o);
        if (again.f < best.f) best = again;
    }
    return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// one-step scheme
// ---------------------------------------------------------------------------

IterateTrace one_step_run(const ModelSpec& m, const EstimatorSpec& est,
                          const Sample& s, const ParamPoint& phi0,
                          const AlgorithmSpec& algo) {
    IterateTrace tr;
    if (!models::is_feasible(m, phi0)) {
        tr.termination = Termination::failure;
        tr.failure_reason = "phi0 infeasible";
        return tr;
    }
    RunContext ctx(m, est, s, algo);
    ctx.obj.set_anchor(phi0);

    ObjectiveValue v0;
    try {
        v0 = ctx.obj.refresh(phi0);
    } catch (const std::exception& e) {
        tr.termination = Termination::failure;
        tr.failure_reason = e.what();
        return tr;
    }
    if (!v0.usable()) {
        tr.termination = Termination::failure;
        tr.failure_reason = "objective not evaluable at phi0: " + v0.flag_reason;
        return tr;
    }
    seed_trace(tr, phi0, v0.value);

    for (int k = 0; k < algo.stop.max_iters; ++k) {
        const ParamPoint prev = tr.points.back();
        const double prev_val = tr.objective_values.back();

        double cand_f;
        std::vector<double> cand_x;
        try {
            if (m.dim() == 1) {
                auto f1 = [&](double a) {
                    return ctx.composite(std::span<const double>(&a, 1), prev);
                };
                const numerics::BrentResult r =
                    numerics::brent_min(f1, m.comp_lo[0], m.comp_hi[0], algo.outer_opt);
                cand_f = r.f;
                cand_x = {r.x};
            } else {
                auto f = [&](std::span<const double> x) { return ctx.composite(x, prev); };
                const numerics::MinResult r =
                    polished_nm(f, prev.flat(), algo.outer_opt, algo.polish_restarts);
                cand_f = r.f;
                cand_x = r.x;
            }

            if (!(cand_f < prev_val)) {
                append_duplicate(tr);
                tr.termination = Termination::no_decrease;
                return tr;
            }
            const ParamPoint cand = models::feasible_project(m, cand_x);
            const double prox_val = ctx.proximal(cand, prev);
            const double dval = cand_f - prox_val;

            tr.points.push_back(cand);
            tr.objective_values.push_back(dval);
            tr.proximal_values.push_back(prox_val);
            tr.step_norms.push_back(step_norm(cand, prev));
            if (stop_after_step(tr, algo.stop, prev_val - dval)) return tr;
            ctx.obj.refresh(cand);  // warm start for the next iteration
        } catch (const std::exception& e) {
            tr.termination = Termination::failure;
            tr.failure_reason = e.what();
            return tr;
        }
    }
    tr.termination = Termination::max_iters;
    return tr;
}

// ---------------------------------------------------------------------------
// two-step scheme (weights first, then component parameters)
// ---------------------------------------------------------------------------

IterateTrace two_step_run(const ModelSpec& m, const EstimatorSpec& est,
                          const Sample& s, const ParamPoint& phi0,
                          const AlgorithmSpec& algo) {
    if (m.dim() == 1)
        throw std::invalid_argument("two_step_run: model has no weight/component split");
    IterateTrace tr;
    if (!models::is_feasible(m, phi0)) {
        tr.termination = Termination::failure;
        tr.failure_reason = "phi0 infeasible";
        return tr;
    }
    RunContext ctx(m, est, s, algo);
    ctx.obj.set_anchor(phi0);

    ObjectiveValue v0;
    try {
        v0 = ctx.obj.refresh(phi0);
    } catch (const std::exception& e) {
        tr.termination = Termination::failure;
        tr.failure_reason = e.what();
        return tr;
    }
    if (!v0.usable()) {
        tr.termination = Termination::failure;
        tr.failure_reason = "objective not evaluable at phi0: " + v0.flag_reason;
        return tr;
    }
    seed_trace(tr, phi0, v0.value);

    for (int k = 0; k < algo.stop.max_iters; ++k) {
        const ParamPoint prev = tr.points.back();
        const double prev_val = tr.objective_values.back();
        try {
            // weights stage (1-D for two components)
            const double th1 = prev.component_params[0], th2 = prev.component_params[1];
            auto f_lam = [&](double lam) {
                const double x[3] = {lam, th1, th2};
                return ctx.composite(std::span<const double>(x, 3), prev);
            };
            const numerics::BrentResult rl =
                numerics::brent_min(f_lam, m.eta, 1.0 - m.eta, algo.outer_opt);
            double lam_next = rl.x;
            double v_lambda = rl.f;
            if (f_lam(prev.weights[0]) < v_lambda) {
                lam_next = prev.weights[0];
                v_lambda = f_lam(lam_next);
            }

            // component stage (2-D) at the new weights
            auto f_theta = [&](std::span<const double> th) {
                const double x[3] = {lam_next, th[0], th[1]};
                return ctx.composite(std::span<const double>(x, 3), prev);
            };
            const double th0[2] = {th1, th2};
            const numerics::MinResult rt = polished_nm(
                f_theta, std::span<const double>(th0, 2), algo.outer_opt,
                algo.polish_restarts);
            const double v_theta = std::min(rt.f, v_lambda);

            if (!(v_theta < prev_val)) {
                append_duplicate(tr);
                tr.termination = Termination::no_decrease;
                return tr;
            }
            const double flat[3] = {lam_next, rt.f <= v_lambda ? rt.x[0] : th1,
                                    rt.f <= v_lambda ? rt.x[1] : th2};
            const ParamPoint cand =
                models::feasible_project(m, std::span<const double>(flat, 3));
            const double prox_val = ctx.proximal(cand, prev);
            const double dval = v_theta - prox_val;

            tr.points.push_back(cand);
            tr.objective_values.push_back(dval);
            tr.proximal_values.push_back(prox_val);
            tr.step_norms.push_back(step_norm(cand, prev));
            tr.lambda_stage.push_back(v_lambda);
            tr.theta_stage.push_back(v_theta);
            if (stop_after_step(tr, algo.stop, prev_val - dval)) return tr;
            ctx.obj.refresh(cand);
        } catch (const std::exception& e) {
            tr.termination = Termination::failure;
            tr.failure_reason = e.what();
            return tr;
        }
    }
    tr.termination = Termination::max_iters;
    return tr;
}

// ---------------------------------------------------------------------------
// closed-form EM (Gaussian mixture, likelihood objective)
// ---------------------------------------------------------------------------

IterateTrace closed_form_em(const ModelSpec& m, const Sample& s,
                            const ParamPoint& phi0, const AlgorithmSpec& algo) {
    if (m.kind != ModelKind::gauss_mix2)
        throw std::invalid_argument("closed_form_em: gauss_mix2 only");
    IterateTrace tr;
    if (!models::is_feasible(m, phi0)) {
        tr.termination = Termination::failure;
        tr.failure_reason = "phi0 infeasible";
        return tr;
    }
    const double n = static_cast<double>(s.size());
    const divergence::ProximalSpec kl = divergence::make_kl_psi();

    auto neg_mean_loglik = [&](const ParamPoint& p) {
        return -objectives::log_likelihood(m, p, s) / n;
    };
    seed_trace(tr, phi0, neg_mean_loglik(phi0));

    for (int k = 0; k < algo.stop.max_iters; ++k) {
        const ParamPoint prev = tr.points.back();
        models::MixturePosteriors h;
        try {
            h = models::mixture_posteriors(m, prev, s.y);
        } catch (const std::exception& e) {
            tr.termination = Termination::failure;
            tr.failure_reason = e.what();
            return tr;
        }
        double s1 = 0.0, sy1 = 0.0, s2 = 0.0, sy2 = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            s1 += h.h1[i];
            sy1 += h.h1[i] * s.y[i];
            s2 += h.h2[i];
            sy2 += h.h2[i] * s.y[i];
        }
        const double flat[3] = {s1 / n, sy1 / s1, sy2 / s2};
        const ParamPoint cand =
            models::feasible_project(m, std::span<const double>(flat, 3));

        const double prev_val = tr.objective_values.back();
        const double dval = neg_mean_loglik(cand);
        tr.points.push_back(cand);
        tr.objective_values.push_back(dval);
        tr.proximal_values.push_back(
            objectives::proximal_term(m, cand, prev, s, kl, algo.prox_quad));
        tr.step_norms.push_back(step_norm(cand, prev));
        if (stop_after_step(tr, algo.stop, prev_val - dval)) return tr;
    }
    tr.termination = Termination::max_iters;
    return tr;
}

IterateTrace run(const ModelSpec& m, const EstimatorSpec& est, const Sample& s,
                 const ParamPoint& phi0, const AlgorithmSpec& algo) {
    switch (algo.variant) {
        case Variant::one_step: return one_step_run(m, est, s, phi0, algo);
        case Variant::two_step: return two_step_run(m, est, s, phi0, algo);
        case Variant::closed_form_em: return closed_form_em(m, s, phi0, algo);
    }
    throw std::logic_error("run: bad variant");
}

// ---------------------------------------------------------------------------
// initialization conditions
// ---------------------------------------------------------------------------

namespace {

// inf over (weight, theta) of a subdensity objective, multi-start Nelder-Mead
double minimize_boundary(const ModelSpec& m,
                         const std::function<double(double, double)>& f,
                         double theta_seed) {
    auto wrapped = [&](std::span<const double> x) {
        const double w = std::clamp(x[0], m.eta, 1.0 - m.eta);
        const double th = std::clamp(x[1], m.comp_lo[0], m.comp_hi[0]);
        return f(w, th);
    };
    numerics::OptimizerOptions opt{400, 1e-6, 1e-10, 0.1};
    double best = kInf;
    const double seeds[2][2] = {{0.5, theta_seed}, {1.0 - m.eta, theta_seed}};
    for (const auto& sd : seeds) {
        const numerics::MinResult r =
            numerics::nelder_mead(wrapped, std::span<const double>(sd, 2), opt);
        best = std::min(best, r.f);
    }
    return best;
}

// sup over theta of a 1-D boundary curve, segmented Brent
double maximize_boundary_1d(const std::function<double(double)>& f, double lo,
                            double hi, int segments) {
    numerics::OptimizerOptions opt{300, 1e-8, 1e-12, 0.1};
    double best = -kInf;
    auto neg = [&](double t) { return -f(t); };
    for (int k = 0; k < segments; ++k) {
        const double a = lo + (hi - lo) * k / segments;
        const double b = lo + (hi - lo) * (k + 1) / segments;
        const numerics::BrentResult r = numerics::brent_min(neg, a, b, opt);
        best = std::max(best, -r.f);
    }
    return best;
}

}  // namespace

InitCheck check_initialization(const ModelSpec& m, const EstimatorSpec& est,
                               const Sample& s, const ParamPoint& phi0,
                               const numerics::QuadratureOptions& qopt) {
    if (!models::is_feasible(m, phi0))
        return {false, "phi0-infeasible", -kInf};

    if (m.kind == ModelKind::cauchy_scale)
        return {true, "cauchy-level-bound", kInf};
    if (est.kind == EstimatorSpec::Kind::classical_dual)
        return {true, "compact-parameter-box", kInf};

    const double n = static_cast<double>(s.size());

    if (est.kind == EstimatorSpec::Kind::log_likelihood) {
        if (m.kind == ModelKind::gauss_mix2) {
            double ybar = 0.0;
            for (double y : s.y) ybar += y;
            ybar /= n;
            const double bound = objectives::boundary_loglik(m, s, 1, ybar);
            const double j0 = objectives::log_likelihood(m, phi0, s);
            return {j0 > bound, "gauss-loglik-single-component", j0 - bound};
        }
        // Weibull: observations at a component's scale point push the
        // shape-at-infinity limit to +inf.
        for (double y : s.y)
            if (y == 0.5 || y == 2.0)
                return {false, "pathological-observation-at-scale-point", -kInf};
        double bound = -kInf;
        for (int keep = 1; keep <= 2; ++keep) {
            auto f = [&](double th) { return objectives::boundary_loglik(m, s, keep, th); };
            bound = std::max(bound, maximize_boundary_1d(f, m.comp_lo[0],
                                                         m.comp_hi[0], 8));
        }
        const double j0 = objectives::log_likelihood(m, phi0, s);
        return {j0 > bound, "weibull-loglik-shape-at-infinity", j0 - bound};
    }

    if (est.kind == EstimatorSpec::Kind::mdpd) {
        const double a = est.div.a;
        const ObjectiveValue v0 = objectives::mdpd_objective(m, phi0, s, a, qopt);
        double theta_seed;
        if (m.kind == ModelKind::gauss_mix2) {
            theta_seed = 0.0;
            for (double y : s.y) theta_seed += y;
            theta_seed /= n;
        } else {
            theta_seed = 1.0;
        }
        double bound = 0.0;  // the all-components-at-infinity limit
        for (int keep = 1; keep <= (m.kind == ModelKind::gauss_mix2 ? 1 : 2); ++keep) {
            auto f = [&](double w, double th) {
                return objectives::boundary_mdpd(m, s, keep, w, th, a, qopt);
            };
            bound = std::min(bound, minimize_boundary(m, f, theta_seed));
        }
        return {v0.value < bound, "mdpd-component-at-infinity", bound - v0.value};
    }

    // kernel dual
    const double gamma = est.div.gamma;
    const kde::Kde k(s, est.kernel);
    const objectives::Admissibility ad = objectives::check_admissible_at(m, est, phi0);
    if (!ad.ok) return {false, ad.condition, -kInf};
    const ObjectiveValue v0 =
        objectives::kernel_dual_estimate(m, phi0, s, gamma, k, qopt);
    double theta_seed;
    if (m.kind == ModelKind::gauss_mix2) {
        theta_seed = 0.0;
        for (double y : s.y) theta_seed += y;
        theta_seed /= n;
    } else {
        theta_seed = 1.0;
    }
    double bound = gamma > 0.0 ? 1.0 / gamma : kInf;  // vanished-model limit
    for (int keep = 1; keep <= (m.kind == ModelKind::gauss_mix2 ? 1 : 2); ++keep) {
        auto f = [&](double w, double th) {
            return objectives::boundary_kernel_dual(m, s, keep, w, th, gamma, k, qopt);
        };
        bound = std::min(bound, minimize_boundary(m, f, theta_seed));
    }
    return {v0.value < bound, "kernel-dual-component-at-infinity", bound - v0.value};
}

}  // namespace divprox::proximal
