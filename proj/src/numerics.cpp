#include "divprox/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace divprox::numerics {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double worst_if_nan(double v) { return std::isnan(v) ? kInf : v; }

}  // namespace

// ---------------------------------------------------------------------------
// Nelder-Mead
// ---------------------------------------------------------------------------

MinResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                      std::span<const double> x0, const OptimizerOptions& opt) {
    const std::size_t d = x0.size();
    if (d < 1) throw std::invalid_argument("nelder_mead: empty start point");

    int evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        return worst_if_nan(f(x));
    };

    std::vector<std::vector<double>> xs(d + 1, std::vector<double>(x0.begin(), x0.end()));
    std::vector<double> fs(d + 1);
    fs[0] = eval(xs[0]);
    if (!std::isfinite(fs[0]))
        throw std::domain_error("nelder_mead: objective not finite at x0");
    for (std::size_t i = 0; i < d; ++i) {
        xs[i + 1][i] += opt.initial_simplex_scale * std::max(1.0, std::abs(x0[i]));
        fs[i + 1] = eval(xs[i + 1]);
    }

    std::vector<std::size_t> ord(d + 1);
    auto sort_simplex = [&] {
        for (std::size_t i = 0; i <= d; ++i) ord[i] = i;
        std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) {
            return fs[a] < fs[b];
        });
    };

    std::vector<double> centroid(d), xr(d), xe(d), xc(d);
    bool converged = false;
    while (evals < opt.max_evals) {
        sort_simplex();
        const std::size_t best = ord[0], worst = ord[d], second = ord[d - 1];

        double diam = 0.0;
        for (std::size_t i = 1; i <= d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                diam = std::max(diam, std::abs(xs[ord[i]][j] - xs[best][j]));
        const double fspread = fs[worst] - fs[best];
        if (diam < opt.x_tolerance || fspread < opt.f_tolerance) {
            converged = true;
            break;
        }

        for (std::size_t j = 0; j < d; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i <= d; ++i)
                if (i != worst) s += xs[i][j];
            centroid[j] = s / static_cast<double>(d);
        }

        for (std::size_t j = 0; j < d; ++j)
            xr[j] = centroid[j] + (centroid[j] - xs[worst][j]);
        const double fr = eval(xr);

        if (fr < fs[best]) {
            for (std::size_t j = 0; j < d; ++j)
                xe[j] = centroid[j] + 2.0 * (centroid[j] - xs[worst][j]);
            const double fe = eval(xe);
            if (fe < fr) {
                xs[worst] = xe;
                fs[worst] = fe;
            } else {
                xs[worst] = xr;
                fs[worst] = fr;
            }
        } else if (fr < fs[second]) {
            xs[worst] = xr;
            fs[worst] = fr;
        } else {
            const bool outside = fr < fs[worst];
            if (outside) {
                for (std::size_t j = 0; j < d; ++j)
                    xc[j] = centroid[j] + 0.5 * (xr[j] - centroid[j]);
            } else {
                for (std::size_t j = 0; j < d; ++j)
                    xc[j] = centroid[j] + 0.5 * (xs[worst][j] - centroid[j]);
            }
            const double fc = eval(xc);
            if (fc < std::min(fr, fs[worst])) {
                xs[worst] = xc;
                fs[worst] = fc;
            } else {
                // shrink toward best
                for (std::size_t i = 0; i <= d; ++i) {
                    if (i == best) continue;
                    for (std::size_t j = 0; j < d; ++j)
                        xs[i][j] = xs[best][j] + 0.5 * (xs[i][j] - xs[best][j]);
                    fs[i] = eval(xs[i]);
                    if (evals >= opt.max_evals) break;
                }
            }
        }
    }

    sort_simplex();
    MinResult r;
    r.x = xs[ord[0]];
    r.f = fs[ord[0]];
    r.evals = evals;
    r.converged = converged;
    return r;
}

// ---------------------------------------------------------------------------
// Brent minimization (localmin)
// ---------------------------------------------------------------------------

BrentResult brent_min(const std::function<double(double)>& f, double lo,
                      double hi, const OptimizerOptions& opt) {
    if (!(lo < hi)) throw std::invalid_argument("brent_min: lo must be < hi");
    constexpr double cgold = 0.3819660112501051;
    constexpr double zeps = 1e-12;

    int evals = 0;
    auto eval = [&](double t) {
        ++evals;
        return worst_if_nan(f(t));
    };

    double a = lo, b = hi;
    double x = a + cgold * (b - a), w = x, v = x;
    double fx = eval(x), fw = fx, fv = fx;
    double d = 0.0, e = 0.0;

    while (evals < opt.max_evals) {
        const double xm = 0.5 * (a + b);
        const double tol1 = opt.x_tolerance * std::abs(x) + zeps;
        const double tol2 = 2.0 * tol1;
        if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) break;

        bool golden = true;
        if (std::abs(e) > tol1) {
            const double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::abs(q);
            const double etemp = e;
            e = d;
            if (std::abs(p) < std::abs(0.5 * q * etemp) && p > q * (a - x) &&
                p < q * (b - x)) {
                d = p / q;
                const double u = x + d;
                if (u - a < tol2 || b - u < tol2)
                    d = std::copysign(tol1, xm - x);
                golden = false;
            }
        }
        if (golden) {
            e = (x >= xm) ? a - x : b - x;
            d = cgold * e;
        }

        const double u = (std::abs(d) >= tol1) ? x + d : x + std::copysign(tol1, d);
        const double fu = eval(u);
        if (fu <= fx) {
            if (u >= x) a = x; else b = x;
            v = w; fv = fw;
            w = x; fw = fx;
            x = u; fx = fu;
        } else {
            if (u < x) a = u; else b = u;
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u; fv = fu;
            }
        }
    }
    return {x, fx, evals};
}

// ---------------------------------------------------------------------------
// Gauss-Legendre nodes (Newton iteration on the Legendre recurrence)
// ---------------------------------------------------------------------------

namespace {

struct GlRule {
    std::vector<double> x, w;
};

const GlRule& gl_rule(int order) {
    if (order < 2) throw std::invalid_argument("gauss_legendre: order must be >= 2");
    static std::map<int, GlRule> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(order);
    if (it != cache.end()) return it->second;

    GlRule rule;
    rule.x.resize(order);
    rule.w.resize(order);
    const int m = (order + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < order; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = order * (z * p0 - p1) / (z * z - 1.0);
            const double z1 = z;
            z = z1 - p0 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        rule.x[i] = -z;
        rule.x[order - 1 - i] = z;
        rule.w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        rule.w[order - 1 - i] = rule.w[i];
    }
    return cache.emplace(order, std::move(rule)).first->second;
}

}  // namespace

void gauss_legendre(int order, std::span<const double>& nodes,
                    std::span<const double>& weights) {
    const GlRule& r = gl_rule(order);
    nodes = r.x;
    weights = r.w;
}

// ---------------------------------------------------------------------------
// Adaptive quadrature
// ---------------------------------------------------------------------------

namespace {

enum class MapKind { none, both_inf, upper_inf, lower_inf };

struct Mapped {
    MapKind kind;
    double a, b;     // original finite endpoints where applicable
    double tlo, thi; // integration range in t-space
};

Mapped map_interval(Interval iv) {
    const bool lo_inf = std::isinf(iv.lo), hi_inf = std::isinf(iv.hi);
    if (!lo_inf && !hi_inf) {
        if (!(iv.lo < iv.hi)) throw std::invalid_argument("integrate: empty interval");
        return {MapKind::none, iv.lo, iv.hi, iv.lo, iv.hi};
    }
    if (lo_inf && hi_inf) return {MapKind::both_inf, 0, 0, -1.0, 1.0};
    if (hi_inf) return {MapKind::upper_inf, iv.lo, 0, 0.0, 1.0};
    return {MapKind::lower_inf, 0, iv.hi, 0.0, 1.0};
}

inline void map_node(const Mapped& m, double t, double& x, double& jac) {
    switch (m.kind) {
        case MapKind::none:
            x = t;
            jac = 1.0;
            break;
        case MapKind::both_inf: {
            const double om = 1.0 - t * t;
            x = t / om;
            jac = (1.0 + t * t) / (om * om);
            break;
        }
        case MapKind::upper_inf: {
            const double om = 1.0 - t;
            x = m.a + t / om;
            jac = 1.0 / (om * om);
            break;
        }
        case MapKind::lower_inf: {
            const double om = 1.0 - t;
            x = m.b - t / om;
            jac = 1.0 / (om * om);
            break;
        }
    }
}

struct PanelEval {
    double value;
    bool finite;
};

class Quadrature {
  public:
    Quadrature(const BatchIntegrand& f, const Mapped& m, const QuadratureOptions& opt)
        : f_(f), m_(m), opt_(opt), rule_(gl_rule(opt.gauss_legendre_order)) {}

    int evaluations = 0;

    PanelEval panel(double t0, double t1) {
        const int n = static_cast<int>(rule_.x.size());
        const double c = 0.5 * (t0 + t1), h = 0.5 * (t1 - t0);
        double xs[64], ws[64], fs[64];
        for (int i = 0; i < n; ++i) {
            const double t = c + h * rule_.x[i];
            double x = 0.0, jac = 0.0;
            map_node(m_, t, x, jac);
            xs[i] = x;
            ws[i] = rule_.w[i] * jac * h;
        }
        f_(std::span<const double>(xs, n), std::span<double>(fs, n));
        evaluations += n;
        double s = 0.0;
        bool finite = true;
        for (int i = 0; i < n; ++i) {
            if (!std::isfinite(fs[i])) finite = false;
            s += ws[i] * fs[i];
        }
        return {s, finite};
    }

    IntegralResult run() {
        IntegralResult out;
        const double total_width = m_.thi - m_.tlo;

        // rough scale for local tolerance apportioning
        const PanelEval whole = panel(m_.tlo, m_.thi);
        double scale = std::abs(whole.value);

        struct Node {
            double t0, t1, val;
            bool finite;
        };
        std::vector<Node> stack;
        stack.push_back({m_.tlo, m_.thi, whole.value, whole.finite});

        double sum = 0.0, err = 0.0;
        int splits = 0;
        bool stalled = false, any_non_finite = false;

        while (!stack.empty()) {
            const Node nd = stack.back();
            stack.pop_back();
            const double mid = 0.5 * (nd.t0 + nd.t1);
            const PanelEval left = panel(nd.t0, mid);
            const PanelEval right = panel(mid, nd.t1);
            const double refined = left.value + right.value;
            const double delta = std::abs(refined - nd.val);
            const double frac = (nd.t1 - nd.t0) / total_width;
            const double tol_local =
                std::max(opt_.abs_tol, opt_.rel_tol * std::max(scale, std::abs(sum))) * frac;
            const bool tiny = (nd.t1 - nd.t0) < 1e-13 * total_width;

            if ((delta <= tol_local && left.finite && right.finite) || tiny) {
                if (!(left.finite && right.finite)) any_non_finite = true;
                sum += refined;
                err += delta;
                scale = std::max(scale, std::abs(sum));
                if (std::abs(sum) > 1e250) {
                    out.value = sum;
                    out.error_estimate = err;
                    out.evaluations = evaluations;
                    out.status = QuadStatus::divergent;
                    return out;
                }
                continue;
            }
            if (++splits > opt_.max_subdivisions) {
                stalled = true;
                // drain remaining panels at current refinement
                sum += refined;
                err += delta;
                for (const Node& rest : stack) {
                    sum += rest.val;
                    err += std::abs(rest.val) * 1e-2 + opt_.abs_tol;
                }
                break;
            }
            stack.push_back({nd.t0, mid, left.value, left.finite});
            stack.push_back({mid, nd.t1, right.value, right.finite});
        }

        const double tol = std::max(opt_.abs_tol, opt_.rel_tol * std::abs(sum));
        if (!stalled && err <= std::max(tol, 4.0 * opt_.abs_tol) && !any_non_finite) {
            out.value = sum;
            out.error_estimate = err;
            out.evaluations = evaluations;
            out.status = QuadStatus::ok;
            return out;
        }

        // dense non-adaptive composite fallback
        const int panels = 256;
        double dense = 0.0;
        bool dense_finite = true;
        for (int i = 0; i < panels; ++i) {
            const double t0 = m_.tlo + total_width * i / panels;
            const double t1 = m_.tlo + total_width * (i + 1) / panels;
            const PanelEval pe = panel(t0, t1);
            if (!pe.finite) dense_finite = false;
            dense += pe.value;
        }
        const double fb_err = std::abs(dense - sum);
        out.value = dense;
        out.error_estimate = fb_err;
        out.evaluations = evaluations;
        if (!std::isfinite(dense) || !dense_finite) {
            out.status = QuadStatus::non_finite;
        } else if (std::abs(dense) > 1e250) {
            out.status = QuadStatus::divergent;
        } else if (fb_err <= 10.0 * std::max(opt_.abs_tol, opt_.rel_tol * std::abs(dense))) {
            out.status = QuadStatus::fallback_used;
        } else {
            out.status = QuadStatus::tolerance_not_met;
        }
        return out;
    }

  private:
    const BatchIntegrand& f_;
    const Mapped& m_;
    const QuadratureOptions& opt_;
    const GlRule& rule_;
};

}  // namespace

IntegralResult integrate(const BatchIntegrand& f, Interval iv,
                         const QuadratureOptions& opt) {
    if (opt.gauss_legendre_order > 64)
        throw std::invalid_argument("integrate: gauss_legendre_order must be <= 64");
    const Mapped m = map_interval(iv);
    Quadrature q(f, m, opt);
    return q.run();
}

IntegralResult integrate(const std::function<double(double)>& f, Interval iv,
                         const QuadratureOptions& opt) {
    BatchIntegrand bf = [&f](std::span<const double> xs, std::span<double> out) {
        for (std::size_t i = 0; i < xs.size(); ++i) out[i] = f(xs[i]);
    };
    return integrate(bf, iv, opt);
}

}  // namespace divprox::numerics
