#pragma once

#include <optional>
#include <span>

#include "divprox/models.hpp"
#include "divprox/numerics.hpp"

// Nonparametric density estimate used by the kernel-based dual estimator.

namespace divprox::kde {

enum class KernelKind { gaussian, epanechnikov, cauchy };

struct KernelSpec {
    KernelKind kind = KernelKind::gaussian;
    std::optional<double> bandwidth;  // empty selects Silverman's rule
};

// 0.9 * min(sd, IQR/1.34) * n^(-1/5); throws on degenerate samples.
double silverman_bandwidth(std::span<const double> obs);

// KDE bound to a sample with a resolved bandwidth.
class Kde {
  public:
    Kde(const models::Sample& sample, const KernelSpec& spec);

    double bandwidth() const { return w_; }
    KernelKind kind() const { return kind_; }
    const std::vector<double>& observations() const { return obs_; }

    double operator()(double y) const;
    void eval_batch(std::span<const double> y, std::span<double> out) const;

    // Interval outside which the estimate vanishes (compact kernels) or the
    // whole line for unbounded kernels; intersect with the model support.
    numerics::Interval support(numerics::Interval model_support) const;

  private:
    std::vector<double> obs_;
    double w_;
    KernelKind kind_;
};

}  // namespace divprox::kde
