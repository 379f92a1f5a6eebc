#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

// Test-only oracles, independent of the library's numeric paths.

namespace testutil {

// central finite difference
inline double fdiff(const std::function<double(double)>& f, double x,
                    double h = 1e-6) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline std::vector<double> fdiff_grad(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x, double h = 1e-5) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double x0 = x[i];
        x[i] = x0 + h;
        const double fp = f(x);
        x[i] = x0 - h;
        const double fm = f(x);
        x[i] = x0;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

// dense midpoint-rule integration on [lo, hi]
inline double riemann(const std::function<double(double)>& f, double lo,
                      double hi, std::size_t n = 2'000'000) {
    const double h = (hi - lo) / static_cast<double>(n);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        s += f(lo + (static_cast<double>(i) + 0.5) * h);
    return s * h;
}

// deterministic uniform stream for property tests
class Uniform {
  public:
    explicit Uniform(std::uint64_t seed) : eng_(seed) {}
    double operator()(double a, double b) {
        return a + (b - a) * ((eng_() >> 11) + 0.5) * 0x1p-53;
    }

  private:
    std::mt19937_64 eng_;
};

inline bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline bool close_rel(double a, double b, double rel, double abs = 0.0) {
    return std::abs(a - b) <= std::max(abs, rel * std::max(std::abs(a), std::abs(b)));
}

}  // namespace testutil
