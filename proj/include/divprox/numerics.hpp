#pragma once

#include <functional>
#include <span>
#include <vector>

// Derivative-free optimizers and adaptive quadrature shared by all objectives.

namespace divprox::numerics {

struct OptimizerOptions {
    int max_evals = 5000;
    double x_tolerance = 1e-8;
    double f_tolerance = 1e-8;
    double initial_simplex_scale = 0.1;
};

struct MinResult {
    std::vector<double> x;
    double f = 0.0;
    int evals = 0;
    bool converged = false;  // false iff stopped on max_evals
};

// Standard reflection/expansion/contraction/shrink simplex (1, 2, 1/2, 1/2),
// deterministic axis-aligned initial simplex. Non-finite objective values are
// ordered as worst; the objective must be finite at x0.
MinResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                      std::span<const double> x0, const OptimizerOptions& opt);

struct BrentResult {
    double x = 0.0;
    double f = 0.0;
    int evals = 0;
};

// Brent golden-section/parabolic minimization on [lo, hi].
BrentResult brent_min(const std::function<double(double)>& f, double lo,
                      double hi, const OptimizerOptions& opt);

struct QuadratureOptions {
    double abs_tol = 1e-9;
    double rel_tol = 1e-7;
    int max_subdivisions = 200;
    int gauss_legendre_order = 20;
};

enum class QuadStatus {
    ok,
    fallback_used,      // adaptive refinement stalled, dense composite agreed
    tolerance_not_met,  // best value returned, error estimate above tolerance
    divergent,          // partial sums grew without bound
    non_finite,         // integrand not finite where it had to be evaluated
};

struct IntegralResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int evaluations = 0;
    QuadStatus status = QuadStatus::ok;
    bool ok() const {
        return status == QuadStatus::ok || status == QuadStatus::fallback_used;
    }
};

struct Interval {
    double lo;
    double hi;  // infinities allowed on either side
};

// Integrand evaluated on a batch of nodes (SIMD-friendly call shape).
using BatchIntegrand =
    std::function<void(std::span<const double> x, std::span<double> fx)>;

// Adaptive bisection with fixed-order Gauss-Legendre panels. Unbounded
// intervals are mapped to bounded ones (x = t/(1-t^2) and one-sided variants).
IntegralResult integrate(const BatchIntegrand& f, Interval iv,
                         const QuadratureOptions& opt);

IntegralResult integrate(const std::function<double(double)>& f, Interval iv,
                         const QuadratureOptions& opt);

// Gauss-Legendre nodes/weights on [-1, 1] for a given order (cached).
void gauss_legendre(int order, std::span<const double>& nodes,
                    std::span<const double>& weights);

}  // namespace divprox::numerics
