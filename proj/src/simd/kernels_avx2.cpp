// AVX2+FMA lane. Compiled with -mavx2 -mfma for this translation unit only;
// dispatch.cpp checks CPU support before handing these out.

#include "divprox/simd/simd.hpp"

#ifdef DIVPROX_HAVE_AVX2

#include <immintrin.h>

#include <cmath>
#include <cstdint>

namespace divprox::simd {
namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;
constexpr double kInvPi = 0.3183098861837906715377675;

inline __m256d set1(double v) { return _mm256_set1_pd(v); }

// ---------------------------------------------------------------------------
// exp on 4 doubles, Cephes-style rational approximation (~1 ulp).
// ---------------------------------------------------------------------------

inline __m256d vexp4(__m256d x) {
    const __m256d log2e = set1(1.4426950408889634073599);
    const __m256d c1 = set1(6.93145751953125e-1);
    const __m256d c2 = set1(1.42860682030941723212e-6);
    const __m256d p0 = set1(1.26177193074810590878e-4);
    const __m256d p1 = set1(3.02994407707441961300e-2);
    const __m256d p2 = set1(9.99999999999999999910e-1);
    const __m256d q0 = set1(3.00198505138664455042e-6);
    const __m256d q1 = set1(2.52448340349684104192e-3);
    const __m256d q2 = set1(2.27265548208155028766e-1);
    const __m256d q3 = set1(2.00000000000000000005e0);
    const __m256d hi = set1(709.782712893384);
    const __m256d lo = set1(-708.396418532264);

    const __m256d over = _mm256_cmp_pd(x, hi, _CMP_GT_OQ);
    const __m256d under = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
    const __m256d is_nan = _mm256_cmp_pd(x, x, _CMP_UNORD_Q);
    __m256d xc = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

    __m256d n = _mm256_round_pd(_mm256_mul_pd(xc, log2e),
                                _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    xc = _mm256_fnmadd_pd(n, c1, xc);
    xc = _mm256_fnmadd_pd(n, c2, xc);

    const __m256d xx = _mm256_mul_pd(xc, xc);
    __m256d px = _mm256_fmadd_pd(p0, xx, p1);
    px = _mm256_fmadd_pd(px, xx, p2);
    px = _mm256_mul_pd(px, xc);
    __m256d qx = _mm256_fmadd_pd(q0, xx, q1);
    qx = _mm256_fmadd_pd(qx, xx, q2);
    qx = _mm256_fmadd_pd(qx, xx, q3);

    const __m256d e = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
    __m256d r = _mm256_fmadd_pd(e, set1(2.0), set1(1.0));

    // scale by 2^n in two halves so n = +-1024 stays representable
    const __m128i ni = _mm256_cvtpd_epi32(n);
    const __m128i ni2 = _mm_srai_epi32(ni, 1);
    const __m128i ni1 = _mm_sub_epi32(ni, ni2);
    const __m256i bias = _mm256_set1_epi64x(1023);
    const __m256d s1 = _mm256_castsi256_pd(
        _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(ni1), bias), 52));
    const __m256d s2 = _mm256_castsi256_pd(
        _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(ni2), bias), 52));
    r = _mm256_mul_pd(_mm256_mul_pd(r, s1), s2);

    r = _mm256_blendv_pd(r, _mm256_setzero_pd(), under);
    r = _mm256_blendv_pd(r, set1(HUGE_VAL), over);
    r = _mm256_blendv_pd(r, x, is_nan);
    return r;
}

// ---------------------------------------------------------------------------
// log on 4 doubles, Cephes-style (valid for normal positive inputs;
// 0 -> -inf, negatives/NaN -> NaN, inf -> inf, denormals get rescaled).
// ---------------------------------------------------------------------------

inline __m256d vlog4(__m256d x) {
    const __m256d one = set1(1.0);
    const __m256d half = set1(0.5);
    const __m256d sqrth = set1(0.70710678118654752440);

    const __m256d zero_mask = _mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_EQ_OQ);
    const __m256d neg_mask = _mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_LT_OQ);
    const __m256d nan_mask = _mm256_cmp_pd(x, x, _CMP_UNORD_Q);
    const __m256d inf_mask = _mm256_cmp_pd(x, set1(HUGE_VAL), _CMP_EQ_OQ);

    // rescale denormals so the exponent extraction below is exact
    const __m256d tiny = _mm256_cmp_pd(x, set1(2.2250738585072014e-308), _CMP_LT_OQ);
    __m256d xs = _mm256_blendv_pd(x, _mm256_mul_pd(x, set1(0x1p54)), tiny);
    __m256d ebias = _mm256_blendv_pd(_mm256_setzero_pd(), set1(54.0), tiny);

    // mantissa in [0.5,1), exponent via the 2^52 magic-number conversion
    const __m256i bits = _mm256_castpd_si256(xs);
    const __m256i expo =
        _mm256_srli_epi64(_mm256_and_si256(bits, _mm256_set1_epi64x(0x7ff0000000000000LL)), 52);
    const __m256d magic = _mm256_set1_pd(0x1p52);
    __m256d e = _mm256_sub_pd(
        _mm256_castsi256_pd(_mm256_or_si256(expo, _mm256_castpd_si256(magic))), magic);
    e = _mm256_sub_pd(e, set1(1022.0));
    e = _mm256_sub_pd(e, ebias);

    const __m256i mant_bits = _mm256_or_si256(
        _mm256_and_si256(bits, _mm256_set1_epi64x(0x000fffffffffffffLL)),
        _mm256_set1_epi64x(0x3fe0000000000000LL));  // mantissa/2 in [0.5,1)
    __m256d m = _mm256_castsi256_pd(mant_bits);

    const __m256d low = _mm256_cmp_pd(m, sqrth, _CMP_LT_OQ);
    e = _mm256_sub_pd(e, _mm256_and_pd(low, one));
    m = _mm256_add_pd(m, _mm256_and_pd(low, m));  // m *= 2 where m < sqrt(1/2)
    m = _mm256_sub_pd(m, one);

    const __m256d P0 = set1(1.01875663804580931796e-4);
    const __m256d P1 = set1(4.97494994976747001425e-1);
    const __m256d P2 = set1(4.70579119878881725854e0);
    const __m256d P3 = set1(1.44989225341610930846e1);
    const __m256d P4 = set1(1.79368678507819816313e1);
    const __m256d P5 = set1(7.70838733755885391666e0);
    const __m256d Q1 = set1(1.12873587189167450590e1);
    const __m256d Q2 = set1(4.52279145837532221105e1);
    const __m256d Q3 = set1(8.29875266912776603211e1);
    const __m256d Q4 = set1(7.11544750618563894466e1);
    const __m256d Q5 = set1(2.31251620126765340583e1);

    __m256d p = _mm256_fmadd_pd(P0, m, P1);
    p = _mm256_fmadd_pd(p, m, P2);
    p = _mm256_fmadd_pd(p, m, P3);
    p = _mm256_fmadd_pd(p, m, P4);
    p = _mm256_fmadd_pd(p, m, P5);
    __m256d q = _mm256_add_pd(m, Q1);
    q = _mm256_fmadd_pd(q, m, Q2);
    q = _mm256_fmadd_pd(q, m, Q3);
    q = _mm256_fmadd_pd(q, m, Q4);
    q = _mm256_fmadd_pd(q, m, Q5);

    const __m256d z = _mm256_mul_pd(m, m);
    __m256d y = _mm256_mul_pd(_mm256_mul_pd(m, z), _mm256_div_pd(p, q));
    y = _mm256_fmadd_pd(e, set1(-2.121944400546905827679e-4), y);
    y = _mm256_fnmadd_pd(half, z, y);

    __m256d r = _mm256_add_pd(m, y);
    r = _mm256_fmadd_pd(e, set1(0.693359375), r);

    r = _mm256_blendv_pd(r, set1(-HUGE_VAL), zero_mask);
    r = _mm256_blendv_pd(r, set1(HUGE_VAL), inf_mask);
    const __m256d qnan = set1(std::numeric_limits<double>::quiet_NaN());
    r = _mm256_blendv_pd(r, qnan, _mm256_or_pd(neg_mask, nan_mask));
    return r;
}

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

// ---------------------------------------------------------------------------

void exp_v(const double* x, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, vexp4(_mm256_loadu_pd(x + i)));
    for (; i < n; ++i) {
        alignas(32) double t[4] = {x[i], 0, 0, 0};
        alignas(32) double r[4];
        _mm256_store_pd(r, vexp4(_mm256_load_pd(t)));
        out[i] = r[0];
    }
}

void log_v(const double* x, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, vlog4(_mm256_loadu_pd(x + i)));
    for (; i < n; ++i) {
        alignas(32) double t[4] = {x[i], 1, 1, 1};
        alignas(32) double r[4];
        _mm256_store_pd(r, vlog4(_mm256_load_pd(t)));
        out[i] = r[0];
    }
}

double sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

double dot(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

double sum_log(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, vlog4(_mm256_loadu_pd(x + i)));
    double s = hsum(acc);
    for (; i < n; ++i) s += std::log(x[i]);
    return s;
}

void gauss_mix2_pdf(const double* y, std::size_t n, double lam, double mu1,
                    double mu2, double* out) {
    const __m256d vmu1 = set1(mu1), vmu2 = set1(mu2);
    const __m256d vl = set1(lam * kInvSqrt2Pi), vr = set1((1.0 - lam) * kInvSqrt2Pi);
    const __m256d mhalf = set1(-0.5);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(y + i);
        const __m256d d1 = _mm256_sub_pd(v, vmu1);
        const __m256d d2 = _mm256_sub_pd(v, vmu2);
        const __m256d e1 = vexp4(_mm256_mul_pd(mhalf, _mm256_mul_pd(d1, d1)));
        const __m256d e2 = vexp4(_mm256_mul_pd(mhalf, _mm256_mul_pd(d2, d2)));
        _mm256_storeu_pd(out + i, _mm256_fmadd_pd(vl, e1, _mm256_mul_pd(vr, e2)));
    }
    for (; i < n; ++i) {
        const double d1 = y[i] - mu1, d2 = y[i] - mu2;
        out[i] = kInvSqrt2Pi * (lam * std::exp(-0.5 * d1 * d1) +
                                (1.0 - lam) * std::exp(-0.5 * d2 * d2));
    }
}

void gauss_comp_pdf(const double* y, std::size_t n, double mu1, double mu2,
                    double* g1, double* g2) {
    const __m256d vmu1 = set1(mu1), vmu2 = set1(mu2);
    const __m256d c = set1(kInvSqrt2Pi), mhalf = set1(-0.5);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(y + i);
        const __m256d d1 = _mm256_sub_pd(v, vmu1);
        const __m256d d2 = _mm256_sub_pd(v, vmu2);
        _mm256_storeu_pd(g1 + i, _mm256_mul_pd(c, vexp4(_mm256_mul_pd(mhalf, _mm256_mul_pd(d1, d1)))));
        _mm256_storeu_pd(g2 + i, _mm256_mul_pd(c, vexp4(_mm256_mul_pd(mhalf, _mm256_mul_pd(d2, d2)))));
    }
    for (; i < n; ++i) {
        const double d1 = y[i] - mu1, d2 = y[i] - mu2;
        g1[i] = kInvSqrt2Pi * std::exp(-0.5 * d1 * d1);
        g2[i] = kInvSqrt2Pi * std::exp(-0.5 * d2 * d2);
    }
}

// w(y) = c*k*exp((k-1)*L - exp(k*L)), L = log(s*y); zero for y <= 0.
inline __m256d weibull_comp4(__m256d y, double k, double scale_mult, double coef) {
    const __m256d pos = _mm256_and_pd(
        _mm256_cmp_pd(y, _mm256_setzero_pd(), _CMP_GT_OQ),
        _mm256_cmp_pd(y, set1(HUGE_VAL), _CMP_LT_OQ));
    const __m256d ysafe = _mm256_blendv_pd(set1(1.0), y, pos);
    const __m256d L = vlog4(_mm256_mul_pd(ysafe, set1(scale_mult)));
    const __m256d inner = vexp4(_mm256_mul_pd(set1(k), L));
    const __m256d arg = _mm256_fmsub_pd(set1(k - 1.0), L, inner);
    const __m256d w = _mm256_mul_pd(set1(coef * k), vexp4(arg));
    return _mm256_and_pd(w, pos);
}

void weibull_mix2_pdf(const double* y, std::size_t n, double lam, double k1,
                      double k2, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(y + i);
        const __m256d w1 = weibull_comp4(v, k1, 2.0, 2.0);
        const __m256d w2 = weibull_comp4(v, k2, 0.5, 0.5);
        _mm256_storeu_pd(out + i,
                         _mm256_fmadd_pd(set1(lam), w1, _mm256_mul_pd(set1(1.0 - lam), w2)));
    }
    for (; i < n; ++i) {
        double w1 = 0.0, w2 = 0.0;
        if (y[i] > 0.0 && std::isfinite(y[i])) {
            const double L1 = std::log(2.0 * y[i]);
            const double L2 = std::log(0.5 * y[i]);
            w1 = 2.0 * k1 * std::exp((k1 - 1.0) * L1 - std::exp(k1 * L1));
            w2 = 0.5 * k2 * std::exp((k2 - 1.0) * L2 - std::exp(k2 * L2));
        }
        out[i] = lam * w1 + (1.0 - lam) * w2;
    }
}

void weibull_comp_pdf(const double* y, std::size_t n, double k1, double k2,
                      double* w1, double* w2) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(y + i);
        _mm256_storeu_pd(w1 + i, weibull_comp4(v, k1, 2.0, 2.0));
        _mm256_storeu_pd(w2 + i, weibull_comp4(v, k2, 0.5, 0.5));
    }
    for (; i < n; ++i) {
        w1[i] = w2[i] = 0.0;
        if (y[i] > 0.0 && std::isfinite(y[i])) {
            const double L1 = std::log(2.0 * y[i]);
            const double L2 = std::log(0.5 * y[i]);
            w1[i] = 2.0 * k1 * std::exp((k1 - 1.0) * L1 - std::exp(k1 * L1));
            w2[i] = 0.5 * k2 * std::exp((k2 - 1.0) * L2 - std::exp(k2 * L2));
        }
    }
}

void cauchy_pdf(const double* y, std::size_t n, double a, double* out) {
    const __m256d va2 = set1(a * a), vc = set1(a * kInvPi);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(y + i);
        _mm256_storeu_pd(out + i,
                         _mm256_div_pd(vc, _mm256_fmadd_pd(v, v, va2)));
    }
    for (; i < n; ++i) out[i] = a * kInvPi / (a * a + y[i] * y[i]);
}

void kde_gauss(const double* y, std::size_t m, const double* obs, std::size_t n,
               double w, double* out) {
    const double c = kInvSqrt2Pi / (static_cast<double>(n) * w);
    const __m256d inv_w = set1(1.0 / w), mhalf = set1(-0.5);
    std::size_t j = 0;
    for (; j + 4 <= m; j += 4) {
        const __m256d vy = _mm256_loadu_pd(y + j);
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t i = 0; i < n; ++i) {
            const __m256d u = _mm256_mul_pd(_mm256_sub_pd(vy, set1(obs[i])), inv_w);
            acc = _mm256_add_pd(acc, vexp4(_mm256_mul_pd(mhalf, _mm256_mul_pd(u, u))));
        }
        _mm256_storeu_pd(out + j, _mm256_mul_pd(set1(c), acc));
    }
    for (; j < m; ++j) {
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
    const __m256d inv_w = set1(1.0 / w), one = set1(1.0);
    std::size_t j = 0;
    for (; j + 4 <= m; j += 4) {
        const __m256d vy = _mm256_loadu_pd(y + j);
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t i = 0; i < n; ++i) {
            const __m256d u = _mm256_mul_pd(_mm256_sub_pd(vy, set1(obs[i])), inv_w);
            const __m256d v = _mm256_fnmadd_pd(u, u, one);
            acc = _mm256_add_pd(acc, _mm256_max_pd(v, _mm256_setzero_pd()));
        }
        _mm256_storeu_pd(out + j, _mm256_mul_pd(set1(c), acc));
    }
    for (; j < m; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double u = (y[j] - obs[i]) / w;
            const double v = 1.0 - u * u;
            s += v > 0.0 ? v : 0.0;
        }
        out[j] = c * s;
    }
}

void kde_cauchy(const double* y, std::size_t m, const double* obs, std::size_t n,
                double w, double* out) {
    const double c = kInvPi / (static_cast<double>(n) * w);
    const __m256d inv_w = set1(1.0 / w), one = set1(1.0);
    std::size_t j = 0;
    for (; j + 4 <= m; j += 4) {
        const __m256d vy = _mm256_loadu_pd(y + j);
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t i = 0; i < n; ++i) {
            const __m256d u = _mm256_mul_pd(_mm256_sub_pd(vy, set1(obs[i])), inv_w);
            acc = _mm256_add_pd(acc, _mm256_div_pd(one, _mm256_fmadd_pd(u, u, one)));
        }
        _mm256_storeu_pd(out + j, _mm256_mul_pd(set1(c), acc));
    }
    for (; j < m; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double u = (y[j] - obs[i]) / w;
            s += 1.0 / (1.0 + u * u);
        }
        out[j] = c * s;
    }
}

}  // namespace

const Kernels* avx2_kernels_impl() {
    static const Kernels k = {
        "avx2",         exp_v,     log_v,
        sum,            dot,       sum_log,
        gauss_mix2_pdf, gauss_comp_pdf,
        weibull_mix2_pdf, weibull_comp_pdf,
        cauchy_pdf,
        kde_gauss,      kde_epanechnikov, kde_cauchy,
    };
    return &k;
}

}  // namespace divprox::simd

#endif  // DIVPROX_HAVE_AVX2
