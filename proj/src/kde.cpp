#include "divprox/kde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "divprox/simd/simd.hpp"

namespace divprox::kde {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// type-7 quantile (linear interpolation between order statistics)
double quantile_type7(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double h = q * (static_cast<double>(v.size()) - 1.0);
    const std::size_t i = static_cast<std::size_t>(h);
    if (i + 1 >= v.size()) return v.back();
    return v[i] + (h - static_cast<double>(i)) * (v[i + 1] - v[i]);
}
}  // namespace

double silverman_bandwidth(std::span<const double> obs) {
    const std::size_t n = obs.size();
    if (n < 2) throw std::domain_error("silverman_bandwidth: need n >= 2");
    double mean = 0.0;
    for (double v : obs) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : obs) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) throw std::domain_error("silverman_bandwidth: degenerate sample");

    std::vector<double> v(obs.begin(), obs.end());
    const double iqr = quantile_type7(v, 0.75) - quantile_type7(v, 0.25);
    double spread = sd;
    if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
    return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

Kde::Kde(const models::Sample& sample, const KernelSpec& spec)
    : obs_(sample.y), kind_(spec.kind) {
    if (obs_.empty()) throw std::invalid_argument("Kde: empty sample");
    if (spec.bandwidth) {
        if (!(*spec.bandwidth > 0.0))
            throw std::invalid_argument("Kde: bandwidth must be > 0");
        w_ = *spec.bandwidth;
    } else {
        w_ = silverman_bandwidth(obs_);
    }
}

void Kde::eval_batch(std::span<const double> y, std::span<double> out) const {
    const auto& k = simd::active();
    switch (kind_) {
        case KernelKind::gaussian:
            k.kde_gauss(y.data(), y.size(), obs_.data(), obs_.size(), w_, out.data());
            break;
        case KernelKind::epanechnikov:
            k.kde_epanechnikov(y.data(), y.size(), obs_.data(), obs_.size(), w_,
                               out.data());
            break;
        case KernelKind::cauchy:
            k.kde_cauchy(y.data(), y.size(), obs_.data(), obs_.size(), w_, out.data());
            break;
    }
}

double Kde::operator()(double y) const {
    double out;
    eval_batch(std::span<const double>(&y, 1), std::span<double>(&out, 1));
    return out;
}

numerics::Interval Kde::support(numerics::Interval model_support) const {
    if (kind_ != KernelKind::epanechnikov) return model_support;
    const auto [mn, mx] = std::minmax_element(obs_.begin(), obs_.end());
    return {std::max(model_support.lo, *mn - w_),
            std::min(model_support.hi, *mx + w_)};
}

}  // namespace divprox::kde
