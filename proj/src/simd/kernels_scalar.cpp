#include "divprox/simd/simd.hpp"

#include <cmath>

namespace divprox::simd {
namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;
constexpr double kInvPi = 0.3183098861837906715377675;

void exp_v(const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(x[i]);
}

void log_v(const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::log(x[i]);
}

double sum(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

double dot(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

double sum_log(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::log(x[i]);
    return s;
}

void gauss_mix2_pdf(const double* y, std::size_t n, double lam, double mu1,
                    double mu2, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        const double d1 = y[i] - mu1, d2 = y[i] - mu2;
        out[i] = kInvSqrt2Pi * (lam * std::exp(-0.5 * d1 * d1) +
                                (1.0 - lam) * std::exp(-0.5 * d2 * d2));
    }
}

void gauss_comp_pdf(const double* y, std::size_t n, double mu1, double mu2,
                    double* g1, double* g2) {
    for (std::size_t i = 0; i < n; ++i) {
        const double d1 = y[i] - mu1, d2 = y[i] - mu2;
        g1[i] = kInvSqrt2Pi * std::exp(-0.5 * d1 * d1);
        g2[i] = kInvSqrt2Pi * std::exp(-0.5 * d2 * d2);
    }
}

// Component 1: shape k1, scale 1/2; component 2: shape k2, scale 2.
// Written through exp/log so overflow degrades to 0/inf the IEEE way.
inline double weibull_comp1(double y, double k1) {
    if (!(y > 0.0) || !std::isfinite(y)) return 0.0;
    const double L = std::log(2.0 * y);
    return 2.0 * k1 * std::exp((k1 - 1.0) * L - std::exp(k1 * L));
}

inline double weibull_comp2(double y, double k2) {
    if (!(y > 0.0) || !std::isfinite(y)) return 0.0;
    const double L = std::log(0.5 * y);
    return 0.5 * k2 * std::exp((k2 - 1.0) * L - std::exp(k2 * L));
}

void weibull_mix2_pdf(const double* y, std::size_t n, double lam, double k1,
                      double k2, double* out) {
    for (std::size_t i = 0; i < n; ++i)
        out[i] = lam * weibull_comp1(y[i], k1) +
                 (1.0 - lam) * weibull_comp2(y[i], k2);
}

void weibull_comp_pdf(const double* y, std::size_t n, double k1, double k2,
                      double* w1, double* w2) {
    for (std::size_t i = 0; i < n; ++i) {
        w1[i] = weibull_comp1(y[i], k1);
        w2[i] = weibull_comp2(y[i], k2);
    }
}

void cauchy_pdf(const double* y, std::size_t n, double a, double* out) {
    for (std::size_t i = 0; i < n; ++i)
        out[i] = a * kInvPi / (a * a + y[i] * y[i]);
}

void kde_gauss(const double* y, std::size_t m, const double* obs,
               std::size_t n, double w, double* out) {
    const double c = kInvSqrt2Pi / (static_cast<double>(n) * w);
    for (std::size_t j = 0; j < m; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double u = (y[j] - obs[i]) / w;
            s += std::exp(-0.5 * u * u);
        }
        out[j] = c * s;
    }
}

void kde_epanechnikov(const double* y, std::size_t m, const double* obs,
                      std::size_t n, double w, double* out) {
    const double c = 0.75 / (static_cast<double>(n) * w);
    for (std::size_t j = 0; j < m; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double u = (y[j] - obs[i]) / w;
            const double v = 1.0 - u * u;
            s += v > 0.0 ? v : 0.0;
        }
        out[j] = c * s;
    }
}

void kde_cauchy(const double* y, std::size_t m, const double* obs,
                std::size_t n, double w, double* out) {
    const double c = kInvPi / (static_cast<double>(n) * w);
    for (std::size_t j = 0; j < m; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double u = (y[j] - obs[i]) / w;
            s += 1.0 / (1.0 + u * u);
        }
        out[j] = c * s;
    }
}

}  // namespace

const Kernels& scalar_kernels() {
    static const Kernels k = {
        "scalar",       exp_v,     log_v,
        sum,            dot,       sum_log,
        gauss_mix2_pdf, gauss_comp_pdf,
        weibull_mix2_pdf, weibull_comp_pdf,
        cauchy_pdf,
        kde_gauss,      kde_epanechnikov, kde_cauchy,
    };
    return k;
}

}  // namespace divprox::simd
