#include "divprox/models.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "divprox/simd/simd.hpp"

namespace divprox::models {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double clamp(double v, double lo, double hi) {
    return std::min(std::max(v, lo), hi);
}
}  // namespace

// ---------------------------------------------------------------------------
// ModelSpec / ParamPoint
// ---------------------------------------------------------------------------

ModelSpec ModelSpec::gauss_mix2(double eta, double mu_lo, double mu_hi) {
    if (!(eta > 0.0 && eta < 0.5))
        throw std::invalid_argument("gauss_mix2: eta must be in (0, 1/2)");
    ModelSpec m;
    m.kind = ModelKind::gauss_mix2;
    m.eta = eta;
    m.comp_lo = {mu_lo, mu_lo};
    m.comp_hi = {mu_hi, mu_hi};
    return m;
}

ModelSpec ModelSpec::weibull_mix2(double eta, double shape_floor, double shape_hi) {
    if (!(eta > 0.0 && eta < 0.5))
        throw std::invalid_argument("weibull_mix2: eta must be in (0, 1/2)");
    if (!(shape_floor > 0.0))
        throw std::invalid_argument("weibull_mix2: shape_floor must be > 0");
    ModelSpec m;
    m.kind = ModelKind::weibull_mix2;
    m.eta = eta;
    m.comp_lo = {shape_floor, shape_floor};
    m.comp_hi = {shape_hi, shape_hi};
    return m;
}

ModelSpec ModelSpec::cauchy_scale(double eps, double a_hi) {
    if (!(eps > 0.0)) throw std::invalid_argument("cauchy_scale: eps must be > 0");
    ModelSpec m;
    m.kind = ModelKind::cauchy_scale;
    m.eta = 0.0;
    m.comp_lo = {eps, 0.0};
    m.comp_hi = {a_hi, 0.0};
    return m;
}

int ModelSpec::dim() const {
    return kind == ModelKind::cauchy_scale ? 1 : 3;
}

int ModelSpec::n_components() const {
    return kind == ModelKind::cauchy_scale ? 1 : 2;
}

numerics::Interval ModelSpec::support() const {
    if (kind == ModelKind::weibull_mix2) return {0.0, kInf};
    return {-kInf, kInf};
}

std::vector<double> ParamPoint::flat() const {
    std::vector<double> x;
    if (!weights.empty()) x.push_back(weights[0]);
    x.insert(x.end(), component_params.begin(), component_params.end());
    return x;
}

ParamPoint ParamPoint::from_flat(const ModelSpec& m, std::span<const double> x) {
    if (static_cast<int>(x.size()) != m.dim())
        throw std::invalid_argument("ParamPoint::from_flat: wrong dimension");
    ParamPoint p;
    if (m.kind == ModelKind::cauchy_scale) {
        p.component_params = {x[0]};
    } else {
        p.weights = {x[0], 1.0 - x[0]};
        p.component_params = {x[1], x[2]};
    }
    return p;
}

// ---------------------------------------------------------------------------
// Sample I/O: single column with a header comment carrying seed + provenance
// ---------------------------------------------------------------------------

void Sample::save_csv(std::ostream& os) const {
    os << "# seed=" << seed << " provenance=" << provenance << "\n";
    os << "y\n";
    os.precision(17);
    for (double v : y) os << v << "\n";
}

Sample Sample::load_csv(std::istream& is) {
    Sample s;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream hs(line.substr(1));
            std::string tok;
            while (hs >> tok) {
                if (tok.rfind("seed=", 0) == 0) s.seed = std::stoull(tok.substr(5));
                if (tok.rfind("provenance=", 0) == 0) s.provenance = tok.substr(11);
            }
            continue;
        }
        if (line == "y") continue;
        s.y.push_back(std::stod(line));
    }
    return s;
}

// ---------------------------------------------------------------------------
// RngStream
// ---------------------------------------------------------------------------

double RngStream::uniform() {
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1p-53;
}

double RngStream::uniform(double a, double b) { return a + (b - a) * uniform(); }

double RngStream::normal() {
    const double u1 = uniform(), u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
}

double RngStream::weibull(double shape, double scale) {
    return scale * std::pow(-std::log(uniform()), 1.0 / shape);
}

double RngStream::cauchy(double scale) {
    return scale * std::tan(std::numbers::pi * (uniform() - 0.5));
}

// ---------------------------------------------------------------------------
// Densities
// ---------------------------------------------------------------------------

void density_batch(const ModelSpec& m, const ParamPoint& p,
                   std::span<const double> y, std::span<double> out) {
    const auto& k = simd::active();
    switch (m.kind) {
        case ModelKind::gauss_mix2:
            k.gauss_mix2_pdf(y.data(), y.size(), p.weights[0],
                             p.component_params[0], p.component_params[1],
                             out.data());
            break;
        case ModelKind::weibull_mix2:
            k.weibull_mix2_pdf(y.data(), y.size(), p.weights[0],
                               p.component_params[0], p.component_params[1],
                               out.data());
            break;
        case ModelKind::cauchy_scale:
            k.cauchy_pdf(y.data(), y.size(), p.component_params[0], out.data());
            break;
    }
}

double density(const ModelSpec& m, const ParamPoint& p, double y) {
    double out;
    density_batch(m, p, std::span<const double>(&y, 1), std::span<double>(&out, 1));
    return out;
}

void component_density_batch(const ModelSpec& m, const ParamPoint& p,
                             std::span<const double> y, std::span<double> f1,
                             std::span<double> f2) {
    const auto& k = simd::active();
    if (m.kind == ModelKind::gauss_mix2) {
        k.gauss_comp_pdf(y.data(), y.size(), p.component_params[0],
                         p.component_params[1], f1.data(), f2.data());
    } else if (m.kind == ModelKind::weibull_mix2) {
        k.weibull_comp_pdf(y.data(), y.size(), p.component_params[0],
                           p.component_params[1], f1.data(), f2.data());
    } else {
        throw std::invalid_argument("component_density_batch: mixtures only");
    }
}

MixturePosteriors mixture_posteriors(const ModelSpec& m, const ParamPoint& p,
                                     std::span<const double> y) {
    const std::size_t n = y.size();
    MixturePosteriors out;
    out.h1.resize(n);
    out.h2.resize(n);
    std::vector<double> f1(n), f2(n);
    component_density_batch(m, p, y, f1, f2);
    const double lam = p.weights[0];
    for (std::size_t i = 0; i < n; ++i) {
        const double a = lam * f1[i], b = (1.0 - lam) * f2[i];
        const double den = a + b;
        if (!(den > 0.0))
            throw std::domain_error("mixture_posteriors: zero marginal density");
        out.h1[i] = a / den;
        out.h2[i] = b / den;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Label posteriors
// ---------------------------------------------------------------------------

namespace {

void component_densities(const ModelSpec& m, const ParamPoint& p, double y,
                         double& f1, double& f2) {
    const auto& k = simd::active();
    if (m.kind == ModelKind::gauss_mix2) {
        k.gauss_comp_pdf(&y, 1, p.component_params[0], p.component_params[1],
                         &f1, &f2);
    } else {
        k.weibull_comp_pdf(&y, 1, p.component_params[0], p.component_params[1],
                           &f1, &f2);
    }
}

}  // namespace

double label_posterior(const ModelSpec& m, const ParamPoint& p, double y,
                       double x) {
    if (m.kind == ModelKind::cauchy_scale) {
        if (x < 0.0) throw std::domain_error("label_posterior: cauchy label x >= 0");
        const double a = p.component_params[0];
        const double y2 = y * y;
        const double ex = std::exp(x);
        if (!std::isfinite(ex)) return 0.0;  // h decays like e^{-x}
        const double den = a * a + ex * y2;
        const double r = y2 * ex * (a * a + y2) / (den * den);
        return std::isfinite(r) ? r : 0.0;
    }
    const int label = static_cast<int>(x);
    if ((label != 1 && label != 2) || static_cast<double>(label) != x)
        throw std::domain_error("label_posterior: mixture label must be 1 or 2");
    double f1, f2;
    component_densities(m, p, y, f1, f2);
    const double lam = p.weights[0];
    const double den = lam * f1 + (1.0 - lam) * f2;
    if (!(den > 0.0))
        throw std::domain_error("label_posterior: zero marginal density");
    return label == 1 ? lam * f1 / den : (1.0 - lam) * f2 / den;
}

std::vector<double> label_posterior_grad(const ModelSpec& m, const ParamPoint& p,
                                         double y, double x) {
    if (m.kind == ModelKind::cauchy_scale) {
        const double a = p.component_params[0];
        const double y2 = y * y;
        const double ex = std::exp(x);
        if (!std::isfinite(ex)) return {0.0};
        const double den = a * a + ex * y2;
        const double d = 2.0 * a * y2 * ex * ((a * a + ex * y2) - 2.0 * (a * a + y2)) /
                         (den * den * den);
        return {std::isfinite(d) ? d : 0.0};
    }
    const int label = static_cast<int>(x);
    double f1, f2;
    component_densities(m, p, y, f1, f2);
    const double lam = p.weights[0];
    const double den = lam * f1 + (1.0 - lam) * f2;
    if (!(den > 0.0))
        throw std::domain_error("label_posterior_grad: zero marginal density");
    const double den2 = den * den;

    double df1, df2;  // d f_j / d theta_j
    if (m.kind == ModelKind::gauss_mix2) {
        df1 = (y - p.component_params[0]) * f1;
        df2 = (y - p.component_params[1]) * f2;
    } else {
        const double k1 = p.component_params[0], k2 = p.component_params[1];
        if (y <= 0.0) throw std::domain_error("label_posterior_grad: weibull y > 0");
        const double L1 = std::log(2.0 * y), L2 = std::log(0.5 * y);
        df1 = f1 * (1.0 / k1 + L1 * (1.0 - std::exp(k1 * L1)));
        df2 = f2 * (1.0 / k2 + L2 * (1.0 - std::exp(k2 * L2)));
    }

    // gradient of h1; h2 = 1 - h1
    std::vector<double> g(3);
    g[0] = f1 * f2 / den2;
    g[1] = lam * (1.0 - lam) * df1 * f2 / den2;
    g[2] = -lam * (1.0 - lam) * f1 * df2 / den2;
    if (label == 2)
        for (double& v : g) v = -v;
    return g;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

Sample sample(const ModelSpec& m, const ParamPoint& p, std::size_t n,
              RngStream& rng) {
    if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
    if (!is_feasible(m, p)) throw std::invalid_argument("sample: infeasible params");
    Sample s;
    s.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        switch (m.kind) {
            case ModelKind::gauss_mix2: {
                const bool first = rng.uniform() < p.weights[0];
                const double mu = first ? p.component_params[0] : p.component_params[1];
                s.y[i] = mu + rng.normal();
                break;
            }
            case ModelKind::weibull_mix2: {
                const bool first = rng.uniform() < p.weights[0];
                s.y[i] = first ? rng.weibull(p.component_params[0], 0.5)
                               : rng.weibull(p.component_params[1], 2.0);
                break;
            }
            case ModelKind::cauchy_scale:
                s.y[i] = rng.cauchy(p.component_params[0]);
                break;
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// Feasibility
// ---------------------------------------------------------------------------

bool is_feasible(const ModelSpec& m, const ParamPoint& p) {
    if (m.kind == ModelKind::cauchy_scale) {
        return p.weights.empty() && p.component_params.size() == 1 &&
               p.component_params[0] >= m.comp_lo[0] &&
               p.component_params[0] <= m.comp_hi[0];
    }
    if (p.weights.size() != 2 || p.component_params.size() != 2) return false;
    if (std::abs(p.weights[0] + p.weights[1] - 1.0) > 1e-12) return false;
    for (double w : p.weights)
        if (w < m.eta - 1e-15 || w > 1.0 - m.eta + 1e-15) return false;
    for (int i = 0; i < 2; ++i)
        if (p.component_params[i] < m.comp_lo[i] || p.component_params[i] > m.comp_hi[i])
            return false;
    return true;
}

ParamPoint feasible_project(const ModelSpec& m, std::span<const double> raw) {
    if (static_cast<int>(raw.size()) != m.dim())
        throw std::invalid_argument("feasible_project: wrong dimension");
    ParamPoint p;
    if (m.kind == ModelKind::cauchy_scale) {
        p.component_params = {clamp(raw[0], m.comp_lo[0], m.comp_hi[0])};
        return p;
    }
    const double lam = clamp(raw[0], m.eta, 1.0 - m.eta);
    p.weights = {lam, 1.0 - lam};
    p.component_params = {clamp(raw[1], m.comp_lo[0], m.comp_hi[0]),
                          clamp(raw[2], m.comp_lo[1], m.comp_hi[1])};
    return p;
}

// ---------------------------------------------------------------------------
// CDFs and quantiles
// ---------------------------------------------------------------------------

namespace {
double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
}  // namespace

double cdf(const ModelSpec& m, const ParamPoint& p, double y) {
    switch (m.kind) {
        case ModelKind::gauss_mix2:
            return p.weights[0] * norm_cdf(y - p.component_params[0]) +
                   p.weights[1] * norm_cdf(y - p.component_params[1]);
        case ModelKind::weibull_mix2: {
            if (y <= 0.0) return 0.0;
            const double k1 = p.component_params[0], k2 = p.component_params[1];
            const double c1 = -std::expm1(-std::pow(2.0 * y, k1));
            const double c2 = -std::expm1(-std::pow(0.5 * y, k2));
            return p.weights[0] * c1 + p.weights[1] * c2;
        }
        case ModelKind::cauchy_scale:
            return 0.5 + std::atan(y / p.component_params[0]) / std::numbers::pi;
    }
    return 0.0;
}

double quantile(const ModelSpec& m, const ParamPoint& p, double q) {
    if (!(q > 0.0 && q < 1.0))
        throw std::invalid_argument("quantile: q must be in (0, 1)");
    if (m.kind == ModelKind::cauchy_scale)
        return p.component_params[0] * std::tan(std::numbers::pi * (q - 0.5));

    double lo, hi;
    if (m.kind == ModelKind::gauss_mix2) {
        lo = std::min(p.component_params[0], p.component_params[1]) - 40.0;
        hi = std::max(p.component_params[0], p.component_params[1]) + 40.0;
    } else {
        lo = 0.0;
        hi = 1.0;
        while (cdf(m, p, hi) < q && hi < 1e12) hi *= 2.0;
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (cdf(m, p, mid) < q) lo = mid; else hi = mid;
        if (hi - lo < 1e-13 * std::max(1.0, std::abs(hi))) break;
    }
    return 0.5 * (lo + hi);
}

}  // namespace divprox::models
