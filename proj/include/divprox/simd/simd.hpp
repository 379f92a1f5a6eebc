#pragma once

#include <cstddef>

// Data-parallel inner-loop kernels. Every kernel has a scalar reference
// implementation and (on x86-64 with AVX2+FMA) a vectorized variant picked
// at runtime. The two lanes are equivalence-tested against each other.

namespace divprox::simd {

struct Kernels {
    const char* name;

    void (*exp_v)(const double* x, double* out, std::size_t n);
    void (*log_v)(const double* x, double* out, std::size_t n);

    double (*sum)(const double* x, std::size_t n);
    double (*dot)(const double* x, const double* y, std::size_t n);
    double (*sum_log)(const double* x, std::size_t n);

    // Unit-variance two-component Gaussian mixture, means mu1/mu2, weight lam.
    void (*gauss_mix2_pdf)(const double* y, std::size_t n, double lam,
                           double mu1, double mu2, double* out);
    // Component densities separately (posterior computations need both).
    void (*gauss_comp_pdf)(const double* y, std::size_t n, double mu1,
                           double mu2, double* g1, double* g2);

    // Two-component Weibull mixture, shapes k1/k2, fixed scales 1/2 and 2.
    void (*weibull_mix2_pdf)(const double* y, std::size_t n, double lam,
                             double k1, double k2, double* out);
    void (*weibull_comp_pdf)(const double* y, std::size_t n, double k1,
                             double k2, double* w1, double* w2);

    // Cauchy scale-a density centered at zero.
    void (*cauchy_pdf)(const double* y, std::size_t n, double a, double* out);

    // Kernel density estimates of `obs` evaluated at `y` (m points).
    void (*kde_gauss)(const double* y, std::size_t m, const double* obs,
                      std::size_t n, double w, double* out);
    void (*kde_epanechnikov)(const double* y, std::size_t m, const double* obs,
                             std::size_t n, double w, double* out);
    void (*kde_cauchy)(const double* y, std::size_t m, const double* obs,
                       std::size_t n, double w, double* out);
};

const Kernels& scalar_kernels();

// nullptr when the CPU lacks AVX2/FMA or the build does not carry the lane.
const Kernels* avx2_kernels();

// Runtime-selected lane. Honors DIVPROX_SIMD=scalar|avx2|auto on first use.
const Kernels& active();

// Force a lane by name ("scalar", "avx2", "auto"); throws on unsupported.
void force_lane(const char* name);

}  // namespace divprox::simd
