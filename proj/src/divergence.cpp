#include "divprox/divergence.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace divprox::divergence {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

DivergenceSpec DivergenceSpec::cressie_read(double gamma) {
    if (!std::isfinite(gamma))
        throw std::invalid_argument("DivergenceSpec: gamma must be finite");
    DivergenceSpec s;
    s.kind = Kind::cressie_read;
    s.gamma = gamma;
    return s;
}

DivergenceSpec DivergenceSpec::dpd(double a) {
    if (!(a > 0.0)) throw std::invalid_argument("DivergenceSpec: dpd needs a > 0");
    DivergenceSpec s;
    s.kind = Kind::dpd;
    s.a = a;
    return s;
}

DivergenceSpec DivergenceSpec::likelihood() {
    DivergenceSpec s;
    s.kind = Kind::likelihood;
    return s;
}

double cressie_read_phi(double gamma, double t) {
    if (t < 0.0) throw std::domain_error("cressie_read_phi: t must be >= 0");
    if (t == 0.0) {
        if (gamma <= 0.0) return kInf;     // divergence value
        if (gamma == 1.0) return 1.0;      // t log t -> 0
        return 1.0 / gamma;
    }
    const double z = t - 1.0;
    if (gamma == 1.0) return t * std::log1p(z) - z;
    if (gamma == 0.0) return z - std::log1p(z);
    // (t^g - 1 - g(t-1)) / (g(g-1)), with the numerator formed through expm1
    // so the zero at t = 1 is hit without cancellation noise.
    const double num = std::expm1(gamma * std::log1p(z)) - gamma * z;
    return num / (gamma * (gamma - 1.0));
}

double cressie_read_phi_prime(double gamma, double t) {
    if (!(t > 0.0)) throw std::domain_error("cressie_read_phi_prime: t must be > 0");
    const double lt = std::log(t);
    if (gamma == 1.0) return lt;
    if (gamma == 0.0) return -std::expm1(-lt);  // 1 - 1/t
    return std::expm1((gamma - 1.0) * lt) / (gamma - 1.0);
}

double cressie_read_phi_sharp(double gamma, double t) {
    if (!(t > 0.0)) throw std::domain_error("cressie_read_phi_sharp: t must be > 0");
    const double lt = std::log(t);
    if (gamma == 0.0) return lt;
    return std::expm1(gamma * lt) / gamma;
}

double default_psi(double t) {
    if (t < 0.0) throw std::domain_error("psi: t must be >= 0");
    const double s = std::sqrt(t) - 1.0;
    return 0.5 * s * s;
}

double default_psi_prime(double t) {
    if (t < 0.0) throw std::domain_error("psi': t must be >= 0");
    if (t == 0.0) return -kInf;
    return 0.5 * (1.0 - 1.0 / std::sqrt(t));
}

ProximalSpec make_default_psi() {
    return {default_psi, default_psi_prime, "half-squared-sqrt"};
}

ProximalSpec make_kl_psi() {
    return {[](double t) {
                if (t < 0.0) throw std::domain_error("psi: t must be >= 0");
                if (t == 0.0) return kInf;
                return t - 1.0 - std::log(t);
            },
            [](double t) {
                if (!(t > 0.0)) return -kInf;
                return 1.0 - 1.0 / t;
            },
            "modified-kl"};
}

}  // namespace divprox::divergence
