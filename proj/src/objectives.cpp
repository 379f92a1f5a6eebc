#include "divprox/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "divprox/simd/simd.hpp"

namespace divprox::objectives {

using models::ModelKind;
using models::ModelSpec;
using models::ParamPoint;
using models::Sample;
using numerics::BatchIntegrand;
using numerics::IntegralResult;
using numerics::Interval;
using numerics::QuadratureOptions;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kQuantileTrunc = 1e-5;

// ---------------------------------------------------------------------------
// EstimatorSpec
// ---------------------------------------------------------------------------
}  // namespace

EstimatorSpec EstimatorSpec::classical_dual(double gamma) {
    EstimatorSpec e;
    e.kind = Kind::classical_dual;
    e.div = divergence::DivergenceSpec::cressie_read(gamma);
    return e;
}

EstimatorSpec EstimatorSpec::kernel_dual(double gamma, kde::KernelSpec k) {
    EstimatorSpec e;
    e.kind = Kind::kernel_dual;
    e.div = divergence::DivergenceSpec::cressie_read(gamma);
    e.kernel = k;
    return e;
}

EstimatorSpec EstimatorSpec::mdpd(double a) {
    EstimatorSpec e;
    e.kind = Kind::mdpd;
    e.div = divergence::DivergenceSpec::dpd(a);
    return e;
}

EstimatorSpec EstimatorSpec::log_likelihood() {
    EstimatorSpec e;
    e.kind = Kind::log_likelihood;
    e.div = divergence::DivergenceSpec::likelihood();
    return e;
}

const char* EstimatorSpec::kind_name() const {
    switch (kind) {
        case Kind::classical_dual: return "classical_dual";
        case Kind::kernel_dual: return "kernel_dual";
        case Kind::mdpd: return "mdpd";
        case Kind::log_likelihood: return "log_likelihood";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Admissibility
// ---------------------------------------------------------------------------

Admissibility check_admissible(const ModelSpec& m, const EstimatorSpec& e) {
    if (m.kind == ModelKind::weibull_mix2 &&
        e.kind == EstimatorSpec::Kind::classical_dual && e.div.gamma > 1.0) {
        return {false, "weibull-classical-gamma>1"};  // sup form unbounded
    }
    return {};
}

Admissibility check_admissible_at(const ModelSpec& m, const EstimatorSpec& e,
                                  const ParamPoint& p) {
    Admissibility st = check_admissible(m, e);
    if (!st.ok) return st;
    if (m.kind != ModelKind::weibull_mix2 ||
        e.kind != EstimatorSpec::Kind::kernel_dual)
        return {};
    const double g = e.div.gamma;
    const double k_min =
        std::min(p.component_params[0], p.component_params[1]);
    const double k_max =
        std::max(p.component_params[0], p.component_params[1]);
    if (g > 1.0) {
        if (e.kernel.kind == kde::KernelKind::gaussian && !(k_min > 2.0))
            return {false, "weibull-kernel-gamma>1-gaussian-needs-min-shape>2"};
        return {};
    }
    if (g < 0.0) {
        const double shape_cap = 1.0 - 1.0 / g;
        if (e.kernel.kind == kde::KernelKind::gaussian) {
            if (!(k_min < shape_cap))
                return {false, "weibull-kernel-gamma<0-needs-min-shape<1-1/gamma"};
            if (!(k_max < 2.0))
                return {false, "weibull-kernel-gamma<0-gaussian-needs-max-shape<2"};
        } else if (e.kernel.kind == kde::KernelKind::epanechnikov) {
            if (!(k_min < shape_cap))
                return {false, "weibull-kernel-gamma<0-needs-min-shape<1-1/gamma"};
        }
    }
    return {};
}

namespace {

// ---------------------------------------------------------------------------
// Integration plumbing
// ---------------------------------------------------------------------------

// Effective window for integrals of Gaussian-mixture expressions.
Interval gauss_window(std::span<const double> centers) {
    double lo = kInf, hi = -kInf;
    for (double c : centers) {
        lo = std::min(lo, c);
        hi = std::max(hi, c);
    }
    return {lo - 12.0, hi + 12.0};
}

// Integrate over a sub-interval of (0, inf) through x = e^v; tames the
// power singularity that small Weibull shapes put at the origin.
IntegralResult integrate_log_domain(const BatchIntegrand& f, Interval iv,
                                    const QuadratureOptions& qopt) {
    BatchIntegrand g = [&f](std::span<const double> v, std::span<double> out) {
        double xs[64];
        const std::size_t n = v.size();
        for (std::size_t i = 0; i < n; ++i) xs[i] = std::exp(v[i]);
        f(std::span<const double>(xs, n), out);
        for (std::size_t i = 0; i < n; ++i) {
            if (xs[i] > 0.0 && std::isfinite(xs[i]))
                out[i] *= xs[i];
            else
                out[i] = 0.0;
        }
    };
    Interval vi{iv.lo > 0.0 ? std::log(iv.lo) : -kInf,
                std::isinf(iv.hi) ? kInf : std::log(iv.hi)};
    return integrate(g, vi, qopt);
}

IntegralResult integrate_support(ModelKind kind, const BatchIntegrand& f,
                                 Interval iv, const QuadratureOptions& qopt) {
    if (kind == ModelKind::weibull_mix2) return integrate_log_domain(f, iv, qopt);
    return integrate(f, iv, qopt);
}

Interval quantile_window(const ModelSpec& m, const ParamPoint& p) {
    return {models::quantile(m, p, kQuantileTrunc),
            models::quantile(m, p, 1.0 - kQuantileTrunc)};
}

void fill_diag(QuadDiagnostics* diag, const IntegralResult& r) {
    if (!diag) return;
    diag->error_estimate = r.error_estimate;
    diag->evaluations += r.evaluations;
    diag->status = r.status;
}

// ---------------------------------------------------------------------------
// Cressie-Read compositions on density pairs
// ---------------------------------------------------------------------------

// phi'(p/q) * p with the gamma-indexed fast paths; 0 where p underflows
// (the t -> 0 limit of phi'(t) t for gamma > 0; boundary-checked elsewhere
// for gamma <= 0).
inline double dual_integrand(double gamma, double p, double q) {
    if (!(p > 0.0)) return 0.0;
    if (p == q) return 0.0;  // phi'(1) = 0, exactly
    if (gamma == 2.0) return (p / q - 1.0) * p;
    if (gamma == 0.5) return 2.0 * (p - std::sqrt(p * q));
    if (gamma == -1.0) return 0.5 * (p - q * q / p);
    if (gamma == 0.0) return p - q;
    if (gamma == 1.0) return std::log(p / q) * p;
    return std::expm1((gamma - 1.0) * std::log(p / q)) / (gamma - 1.0) * p;
}

// phi#(p/q) = ((p/q)^gamma - 1)/gamma, log at gamma = 0.
inline double sharp_term(double gamma, double p, double q) {
    if (p == q) return 0.0;
    const double r = p / q;
    if (gamma == 2.0) return 0.5 * (r * r - 1.0);
    if (gamma == 0.5) return 2.0 * (std::sqrt(r) - 1.0);
    if (gamma == -1.0) return 1.0 - 1.0 / r;
    if (gamma == 0.0) return std::log(r);
    if (gamma == 1.0) return r - 1.0;
    return std::expm1(gamma * std::log(r)) / gamma;
}

std::vector<double> eval_density_at(const ModelSpec& m, const ParamPoint& p,
                                    const std::vector<double>& y) {
    std::vector<double> out(y.size());
    models::density_batch(m, p, y, out);
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// dual_inner
// ---------------------------------------------------------------------------

double dual_inner(const ModelSpec& m, const ParamPoint& phi,
                  const ParamPoint& alpha, const Sample& s, double gamma,
                  const QuadratureOptions& qopt, QuadDiagnostics* diag) {
    const std::size_t n = s.size();
    if (n == 0) throw std::invalid_argument("dual_inner: empty sample");

    // Cauchy Pearson chi^2 has the exact inner function; quadrature-validated.
    if (m.kind == ModelKind::cauchy_scale && gamma == 2.0) {
        const double a = phi.component_params[0];
        const double b = alpha.component_params[0];
        double mean_r2 = 0.0;
        for (double y : s.y) {
            const double r = a * (b * b + y * y) / (b * (a * a + y * y));
            mean_r2 += r * r;
        }
        mean_r2 /= static_cast<double>(n);
        return (a * a + b * b) / (2.0 * a * b) - 1.0 - 0.5 * (mean_r2 - 1.0);
    }

    Interval window = m.support();
    if (m.kind == ModelKind::gauss_mix2) {
        const double c[4] = {phi.component_params[0], phi.component_params[1],
                             alpha.component_params[0], alpha.component_params[1]};
        window = gauss_window(std::span<const double>(c, 4));
    } else if (m.kind == ModelKind::weibull_mix2 && gamma < 0.0) {
        // Analytic domain walls of the supremal form: the integral term is
        // -inf when the alpha shapes violate them.
        const double kp_min =
            std::min(phi.component_params[0], phi.component_params[1]);
        const double ka_min =
            std::min(alpha.component_params[0], alpha.component_params[1]);
        if (!(gamma * kp_min + (1.0 - gamma) * ka_min > 0.0)) return -kInf;
        if (alpha.component_params[1] < phi.component_params[1]) return -kInf;
        // Truncate to where the model carries mass: the exact integral picks
        // up a slowly growing far tail that no finite-sample criterion needs.
        window = quantile_window(m, phi);
    }

    BatchIntegrand f = [&](std::span<const double> xs, std::span<double> out) {
        double pphi[64], palpha[64];
        models::density_batch(m, phi, xs, std::span<double>(pphi, xs.size()));
        models::density_batch(m, alpha, xs, std::span<double>(palpha, xs.size()));
        for (std::size_t i = 0; i < xs.size(); ++i)
            out[i] = dual_integrand(gamma, pphi[i], palpha[i]);
    };
    const IntegralResult ir = integrate_support(m.kind, f, window, qopt);
    fill_diag(diag, ir);
    if (ir.status == numerics::QuadStatus::divergent ||
        ir.status == numerics::QuadStatus::non_finite)
        return -kInf;

    std::vector<double> pphi_y = eval_density_at(m, phi, s.y);
    std::vector<double> palpha_y = eval_density_at(m, alpha, s.y);
    double mean_sharp = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(palpha_y[i] > 0.0) || !(pphi_y[i] > 0.0)) return -kInf;
        mean_sharp += sharp_term(gamma, pphi_y[i], palpha_y[i]);
    }
    mean_sharp /= static_cast<double>(n);
    return ir.value - mean_sharp;
}

// ---------------------------------------------------------------------------
// classical_dual_estimate
// ---------------------------------------------------------------------------

namespace {

struct InnerBox {
    std::vector<double> lo, hi;
};

InnerBox inner_box(const ModelSpec& m, const EstimatorSpec& spec,
                   const ParamPoint& phi, double gamma) {
    InnerBox b;
    if (!spec.inner_lo.empty()) {
        b.lo = spec.inner_lo;
        b.hi = spec.inner_hi;
    } else if (m.kind == ModelKind::cauchy_scale) {
        b.lo = {m.comp_lo[0]};
        b.hi = {m.comp_hi[0]};
    } else {
        b.lo = {m.eta, m.comp_lo[0], m.comp_lo[1]};
        b.hi = {1.0 - m.eta, m.comp_hi[0], m.comp_hi[1]};
    }
    // Neymann-type wall for the Weibull mixture: keep the first alpha shape
    // a small step above the integrability border.
    if (m.kind == ModelKind::weibull_mix2 && gamma < 0.0)
        b.hi[1] = std::min(b.hi[1], 0.05 + 0.5 * phi.component_params[0]);
    return b;
}

ParamPoint clamp_to_box(const ModelSpec& m, const InnerBox& b,
                        std::span<const double> x) {
    std::vector<double> c(x.begin(), x.end());
    for (std::size_t i = 0; i < c.size(); ++i)
        c[i] = std::min(std::max(c[i], b.lo[i]), b.hi[i]);
    return ParamPoint::from_flat(m, c);
}

}  // namespace

namespace {

// optimize_from_phi: run a simplex search from phi itself as well; the warm
// re-evaluations inside a proximal iteration keep phi only as the exact
// f(phi, phi) = 0 baseline.
ObjectiveValue classical_dual_impl(const ModelSpec& m, const ParamPoint& phi,
                                   const Sample& s, double gamma,
                                   const EstimatorSpec& spec,
                                   std::span<const ParamPoint> starts,
                                   bool optimize_from_phi) {
    {
        const Admissibility ad = check_admissible(m, spec);
        if (!ad.ok) throw std::domain_error("classical_dual_estimate: " + ad.condition);
    }
    const InnerBox box = inner_box(m, spec, phi, gamma);
    long long quad_evals = 0;

    auto f_at = [&](const ParamPoint& alpha) {
        QuadDiagnostics d;
        const double v = dual_inner(m, phi, alpha, s, gamma, spec.quad, &d);
        quad_evals += d.evaluations;
        return v;
    };

    ObjectiveValue out;
    double best = -kInf;
    std::optional<ParamPoint> best_alpha;

    if (m.kind == ModelKind::cauchy_scale) {
        auto neg = [&](double b) {
            return -f_at(clamp_to_box(m, box, std::span<const double>(&b, 1)));
        };
        const double lo = box.lo[0], hi = box.hi[0];
        const int segs = std::max(1, spec.inner_segments);
        for (int k = 0; k < segs; ++k) {
            const double a0 = lo + (hi - lo) * k / segs;
            const double a1 = lo + (hi - lo) * (k + 1) / segs;
            const numerics::BrentResult r = numerics::brent_min(neg, a0, a1, spec.inner_opt);
            if (-r.f > best) {
                best = -r.f;
                best_alpha = clamp_to_box(m, box, std::span<const double>(&r.x, 1));
            }
        }
        const double at_phi = f_at(clamp_to_box(m, box, phi.flat()));
        if (at_phi > best) {
            best = at_phi;
            best_alpha = clamp_to_box(m, box, phi.flat());
        }
    } else {
        struct Start {
            ParamPoint p;
            bool optimize;
        };
        std::vector<Start> all;
        all.push_back({phi, optimize_from_phi});
        for (const ParamPoint& p : starts) all.push_back({p, true});
        auto neg = [&](std::span<const double> x) {
            return -f_at(clamp_to_box(m, box, x));
        };
        for (const Start& st : all) {
            const ParamPoint st_c = clamp_to_box(m, box, st.p.flat());
            const double f0 = f_at(st_c);
            if (f0 > best) {
                best = f0;
                best_alpha = st_c;
            }
            if (!st.optimize) continue;
            if (!std::isfinite(f0)) continue;  // start sits on a domain wall
            const numerics::MinResult r =
                numerics::nelder_mead(neg, st_c.flat(), spec.inner_opt);
            if (-r.f > best) {
                best = -r.f;
                best_alpha = clamp_to_box(m, box, r.x);
            }
        }
    }

    if (!best_alpha || !std::isfinite(best)) {
        out.flagged = true;
        out.flag_reason = "inner-sup-infeasible";
        out.value = kInf;
        return out;
    }

    // final evaluation carries the reported quadrature diagnostics
    QuadDiagnostics d;
    out.value = dual_inner(m, phi, *best_alpha, s, gamma, spec.quad, &d);
    d.evaluations = quad_evals + d.evaluations;
    out.quad = d;
    out.inner_argmax = *best_alpha;
    if (!std::isfinite(out.value)) {
        out.flagged = true;
        out.flag_reason = "inner-sup-infeasible";
    }
    return out;
}

}  // namespace

ObjectiveValue classical_dual_estimate(const ModelSpec& m, const ParamPoint& phi,
                                       const Sample& s, double gamma,
                                       const EstimatorSpec& spec,
                                       std::span<const ParamPoint> starts) {
    return classical_dual_impl(m, phi, s, gamma, spec, starts, true);
}

ObjectiveValue classical_dual_estimate(const ModelSpec& m, const ParamPoint& phi,
                                       const Sample& s, double gamma,
                                       const EstimatorSpec& spec) {
    std::vector<ParamPoint> starts;
    const InnerBox b = inner_box(m, spec, phi, gamma);
    std::vector<double> mid(b.lo.size());
    for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (b.lo[i] + b.hi[i]);
    starts.push_back(ParamPoint::from_flat(m, mid));
    return classical_dual_estimate(m, phi, s, gamma, spec, starts);
}

// ---------------------------------------------------------------------------
// kernel_dual_estimate
// ---------------------------------------------------------------------------

ObjectiveValue kernel_dual_with_estimate(const ModelSpec& m, const ParamPoint& phi,
                                         const Sample& s, double gamma,
                                         const DensityFn& estimate, Interval window,
                                         const QuadratureOptions& qopt) {
    BatchIntegrand f = [&](std::span<const double> xs, std::span<double> out) {
        double pphi[64], kv[64];
        models::density_batch(m, phi, xs, std::span<double>(pphi, xs.size()));
        estimate(xs, std::span<double>(kv, xs.size()));
        for (std::size_t i = 0; i < xs.size(); ++i)
            out[i] = dual_integrand(gamma, pphi[i], kv[i]);
    };
    ObjectiveValue out;
    const IntegralResult ir = integrate_support(m.kind, f, window, qopt);
    fill_diag(&out.quad, ir);
    if (ir.status == numerics::QuadStatus::divergent ||
        ir.status == numerics::QuadStatus::non_finite) {
        out.flagged = true;
        out.flag_reason = "kernel-dual-quadrature-failed";
        out.value = ir.value;
        return out;
    }

    const std::size_t n = s.size();
    std::vector<double> pphi_y = eval_density_at(m, phi, s.y);
    std::vector<double> kv_y(n);
    estimate(s.y, kv_y);
    double mean_sharp = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(pphi_y[i] > 0.0) || !(kv_y[i] > 0.0)) {
            out.flagged = true;
            out.flag_reason = "zero-density-at-observation";
            return out;
        }
        mean_sharp += sharp_term(gamma, pphi_y[i], kv_y[i]);
    }
    out.value = ir.value - mean_sharp / static_cast<double>(n);
    return out;
}

ObjectiveValue kernel_dual_estimate(const ModelSpec& m, const ParamPoint& phi,
                                    const Sample& s, double gamma,
                                    const kde::Kde& k,
                                    const QuadratureOptions& qopt) {
    {
        EstimatorSpec probe = EstimatorSpec::kernel_dual(gamma, {k.kind(), k.bandwidth()});
        const Admissibility ad = check_admissible_at(m, probe, phi);
        if (!ad.ok) throw std::domain_error("kernel_dual_estimate: " + ad.condition);
    }
    Interval window = k.support(m.support());
    // Unbounded kernels: restrict to where the model carries mass, otherwise
    // the ratio against the estimator's vanishing tails is numerical noise.
    if (std::isinf(window.lo) || std::isinf(window.hi)) {
        const Interval qw = quantile_window(m, phi);
        window.lo = std::max(window.lo, qw.lo);
        window.hi = std::min(window.hi, qw.hi);
    }
    const DensityFn est = [&k](std::span<const double> xs, std::span<double> out) {
        k.eval_batch(xs, out);
    };
    return kernel_dual_with_estimate(m, phi, s, gamma, est, window, qopt);
}

// ---------------------------------------------------------------------------
// mdpd_objective / log_likelihood
// ---------------------------------------------------------------------------

ObjectiveValue mdpd_objective(const ModelSpec& m, const ParamPoint& phi,
                              const Sample& s, double a,
                              const QuadratureOptions& qopt) {
    if (!(a > 0.0)) throw std::invalid_argument("mdpd_objective: a must be > 0");
    ObjectiveValue out;
    if (m.kind == ModelKind::weibull_mix2) {
        const double k_min =
            std::min(phi.component_params[0], phi.component_params[1]);
        if ((k_min - 1.0) * (1.0 + a) <= -1.0) {
            out.value = kInf;  // integral of p^(1+a) diverges at the origin
            out.flag_reason = "mdpd-integral-divergent-at-zero";
            return out;
        }
    }

    Interval window = m.support();
    if (m.kind == ModelKind::gauss_mix2)
        window = gauss_window(phi.component_params);

    BatchIntegrand f = [&](std::span<const double> xs, std::span<double> out_v) {
        double p[64];
        models::density_batch(m, phi, xs, std::span<double>(p, xs.size()));
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (a == 0.5)
                out_v[i] = p[i] * std::sqrt(p[i]);
            else if (a == 1.0)
                out_v[i] = p[i] * p[i];
            else
                out_v[i] = std::pow(p[i], 1.0 + a);
        }
    };
    const IntegralResult ir = integrate_support(m.kind, f, window, qopt);
    fill_diag(&out.quad, ir);
    if (!ir.ok()) {
        out.flagged = true;
        out.flag_reason = "mdpd-quadrature-failed";
        out.value = ir.value;
        return out;
    }

    std::vector<double> p_y = eval_density_at(m, phi, s.y);
    double mean_pa = 0.0;
    for (double p : p_y)
        mean_pa += (a == 0.5) ? std::sqrt(p) : (a == 1.0 ? p : std::pow(p, a));
    mean_pa /= static_cast<double>(s.size());
    out.value = ir.value - (a + 1.0) / a * mean_pa;
    return out;
}

double log_likelihood(const ModelSpec& m, const ParamPoint& phi, const Sample& s) {
    std::vector<double> p_y = eval_density_at(m, phi, s.y);
    return simd::active().sum_log(p_y.data(), p_y.size());
}

// ---------------------------------------------------------------------------
// proximal term and its gradient
// ---------------------------------------------------------------------------

namespace {

// truncation point where the Cauchy posterior drops below 1e-12
double cauchy_label_cut(double a_prev, double y) {
    const double y2 = std::max(y * y, 1e-30);
    return std::log((a_prev * a_prev + y2) / y2 * 1e12) + 2.0;
}

}  // namespace

double proximal_term(const ModelSpec& m, const ParamPoint& phi,
                     const ParamPoint& prev, const Sample& s,
                     const divergence::ProximalSpec& psi,
                     const QuadratureOptions& qopt) {
    const std::size_t n = s.size();
    if (m.kind != ModelKind::cauchy_scale) {
        const models::MixturePosteriors hp = models::mixture_posteriors(m, phi, s.y);
        const models::MixturePosteriors hq = models::mixture_posteriors(m, prev, s.y);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!(hq.h1[i] > 0.0) || !(hq.h2[i] > 0.0))
                throw std::domain_error("proximal_term: zero posterior");
            acc += psi.psi(hp.h1[i] / hq.h1[i]) * hq.h1[i];
            acc += psi.psi(hp.h2[i] / hq.h2[i]) * hq.h2[i];
        }
        return acc / static_cast<double>(n);
    }

    const double ap = prev.component_params[0];
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double y = s.y[i];
        auto f = [&](double x) {
            const double h = models::label_posterior(m, phi, y, x);
            const double h0 = models::label_posterior(m, prev, y, x);
            if (!(h0 > 0.0)) throw std::domain_error("proximal_term: zero posterior");
            return psi.psi(h / h0) * h0;
        };
        const IntegralResult ir =
            numerics::integrate(std::function<double(double)>(f),
                                Interval{0.0, cauchy_label_cut(ap, y)}, qopt);
        acc += ir.value;
    }
    return acc / static_cast<double>(n);
}

std::vector<double> proximal_term_gradient(const ModelSpec& m,
                                           const ParamPoint& phi,
                                           const ParamPoint& prev,
                                           const Sample& s,
                                           const divergence::ProximalSpec& psi,
                                           const QuadratureOptions& qopt) {
    const std::size_t n = s.size();
    const int d = m.dim();
    std::vector<double> grad(d, 0.0);

    if (m.kind != ModelKind::cauchy_scale) {
        const models::MixturePosteriors hp = models::mixture_posteriors(m, phi, s.y);
        const models::MixturePosteriors hq = models::mixture_posteriors(m, prev, s.y);
        for (std::size_t i = 0; i < n; ++i) {
            const std::vector<double> g1 =
                models::label_posterior_grad(m, phi, s.y[i], 1.0);
            const double w1 = psi.psi_prime(hp.h1[i] / hq.h1[i]);
            const double w2 = psi.psi_prime(hp.h2[i] / hq.h2[i]);
            for (int j = 0; j < d; ++j) grad[j] += g1[j] * (w1 - w2);
        }
    } else {
        const double ap = prev.component_params[0];
        for (std::size_t i = 0; i < n; ++i) {
            const double y = s.y[i];
            auto f = [&](double x) {
                const double h = models::label_posterior(m, phi, y, x);
                const double h0 = models::label_posterior(m, prev, y, x);
                return models::label_posterior_grad(m, phi, y, x)[0] *
                       psi.psi_prime(h / h0);
            };
            const IntegralResult ir =
                numerics::integrate(std::function<double(double)>(f),
                                    Interval{0.0, cauchy_label_cut(ap, y)}, qopt);
            grad[0] += ir.value;
        }
    }
    for (double& g : grad) g /= static_cast<double>(n);
    return grad;
}

// ---------------------------------------------------------------------------
// Objective (run-bound evaluator)
// ---------------------------------------------------------------------------

Objective::Objective(const ModelSpec& m, const EstimatorSpec& spec, const Sample& s)
    : model_(m), spec_(spec), sample_(s) {
    const Admissibility ad = check_admissible(m, spec);
    if (!ad.ok) throw std::domain_error("Objective: " + ad.condition);
    if (spec_.kind == EstimatorSpec::Kind::kernel_dual)
        kde_.emplace(sample_, spec_.kernel);
}

void Objective::set_anchor(const ParamPoint& phi0) { anchor_ = phi0; }

ObjectiveValue Objective::eval_with_starts(const ParamPoint& phi,
                                           std::span<const ParamPoint> starts,
                                           bool optimize_from_phi) const {
    switch (spec_.kind) {
        case EstimatorSpec::Kind::classical_dual:
            return classical_dual_impl(model_, phi, sample_, spec_.div.gamma,
                                       spec_, starts, optimize_from_phi);
        case EstimatorSpec::Kind::kernel_dual: {
            const Admissibility ad = check_admissible_at(model_, spec_, phi);
            if (!ad.ok) {
                ObjectiveValue v;
                v.value = kInf;
                v.flag_reason = ad.condition;
                return v;
            }
            return kernel_dual_estimate(model_, phi, sample_, spec_.div.gamma,
                                        *kde_, spec_.quad);
        }
        case EstimatorSpec::Kind::mdpd:
            return mdpd_objective(model_, phi, sample_, spec_.div.a, spec_.quad);
        case EstimatorSpec::Kind::log_likelihood: {
            ObjectiveValue v;
            v.value = -log_likelihood(model_, phi, sample_) /
                      static_cast<double>(sample_.size());
            return v;
        }
    }
    throw std::logic_error("Objective: bad kind");
}

ObjectiveValue Objective::refresh(const ParamPoint& phi) {
    std::vector<ParamPoint> starts;
    if (anchor_) starts.push_back(*anchor_);
    {
        InnerBox b = inner_box(model_, spec_, phi, spec_.div.gamma);
        std::vector<double> mid(b.lo.size());
        for (std::size_t i = 0; i < mid.size(); ++i)
            mid[i] = 0.5 * (b.lo[i] + b.hi[i]);
        starts.push_back(ParamPoint::from_flat(model_, mid));
    }
    if (warm_) starts.push_back(*warm_);
    ObjectiveValue v = eval_with_starts(phi, starts, true);
    if (v.inner_argmax) warm_ = v.inner_argmax;
    return v;
}

ObjectiveValue Objective::eval(const ParamPoint& phi) const {
    if (spec_.kind != EstimatorSpec::Kind::classical_dual)
        return eval_with_starts(phi, {}, true);
    std::vector<ParamPoint> starts;
    if (warm_) {
        // within-iteration evaluation: one warm simplex run, phi as baseline
        starts.push_back(*warm_);
        return eval_with_starts(phi, starts, false);
    }
    if (anchor_) starts.push_back(*anchor_);
    InnerBox b = inner_box(model_, spec_, phi, spec_.div.gamma);
    std::vector<double> mid(b.lo.size());
    for (std::size_t i = 0; i < mid.size(); ++i)
        mid[i] = 0.5 * (b.lo[i] + b.hi[i]);
    starts.push_back(ParamPoint::from_flat(model_, mid));
    return eval_with_starts(phi, starts, true);
}

// ---------------------------------------------------------------------------
// boundary (one component removed) objectives for initialization checks
// ---------------------------------------------------------------------------

namespace {

ParamPoint degenerate_point(double theta) {
    ParamPoint p;
    p.weights = {0.5, 0.5};
    p.component_params = {theta, theta};
    return p;
}

std::vector<double> sub_density_at(const ModelSpec& m, int keep, double w,
                                   double theta, std::span<const double> y) {
    std::vector<double> f1(y.size()), f2(y.size());
    models::component_density_batch(m, degenerate_point(theta), y, f1, f2);
    std::vector<double>& f = (keep == 1) ? f1 : f2;
    for (double& v : f) v *= w;
    return f;
}

Interval sub_window(const ModelSpec& m, double theta,
                    std::span<const double> data) {
    if (m.kind == ModelKind::gauss_mix2) {
        double lo = theta, hi = theta;
        for (double v : data) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        return {lo - 12.0, hi + 12.0};
    }
    return m.support();
}

}  // namespace

double boundary_loglik(const ModelSpec& m, const Sample& s, int keep, double theta) {
    const std::vector<double> f = sub_density_at(m, keep, 1.0, theta, s.y);
    return simd::active().sum_log(f.data(), f.size());
}

double boundary_mdpd(const ModelSpec& m, const Sample& s, int keep, double w,
                     double theta, double a, const QuadratureOptions& qopt) {
    if (m.kind == ModelKind::weibull_mix2 && (theta - 1.0) * (1.0 + a) <= -1.0)
        return kInf;
    BatchIntegrand f = [&](std::span<const double> xs, std::span<double> out) {
        const std::vector<double> p =
            sub_density_at(m, keep, w, theta, xs);
        for (std::size_t i = 0; i < xs.size(); ++i)
            out[i] = std::pow(p[i], 1.0 + a);
    };
    const IntegralResult ir =
        integrate_support(m.kind, f, sub_window(m, theta, s.y), qopt);
    const std::vector<double> p_y = sub_density_at(m, keep, w, theta, s.y);
    double mean_pa = 0.0;
    for (double p : p_y) mean_pa += std::pow(p, a);
    mean_pa /= static_cast<double>(s.size());
    return ir.value - (a + 1.0) / a * mean_pa;
}

double boundary_kernel_dual(const ModelSpec& m, const Sample& s, int keep,
                            double w, double theta, double gamma,
                            const kde::Kde& k, const QuadratureOptions& qopt) {
    Interval window = k.support(m.support());
    const Interval sw = sub_window(m, theta, s.y);
    window.lo = std::max(window.lo, sw.lo);
    window.hi = std::min(window.hi, sw.hi);
    if (m.kind == ModelKind::weibull_mix2 && std::isinf(window.hi)) {
        // cap by the surviving component's extreme quantile
        const double scale = keep == 1 ? 0.5 : 2.0;
        window.hi = scale * std::pow(std::log(1.0 / kQuantileTrunc), 1.0 / theta);
    }
    BatchIntegrand f = [&](std::span<const double> xs, std::span<double> out) {
        const std::vector<double> p = sub_density_at(m, keep, w, theta, xs);
        double kv[64];
        k.eval_batch(xs, std::span<double>(kv, xs.size()));
        for (std::size_t i = 0; i < xs.size(); ++i)
            out[i] = dual_integrand(gamma, p[i], kv[i]);
    };
    const IntegralResult ir = integrate_support(m.kind, f, window, qopt);

    const std::vector<double> p_y = sub_density_at(m, keep, w, theta, s.y);
    std::vector<double> kv_y(s.size());
    k.eval_batch(s.y, kv_y);
    double mean_sharp = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!(p_y[i] > 0.0)) return kInf;  // observation outside the sub-model
        mean_sharp += sharp_term(gamma, p_y[i], kv_y[i]);
    }
    return ir.value - mean_sharp / static_cast<double>(s.size());
}

}  // namespace divprox::objectives
