#pragma once

#include <functional>
#include <string>

// Scalar divergence generators (Cressie-Read family, density power exponent)
// and the proximal kernel psi.

namespace divprox::divergence {

struct DivergenceSpec {
    enum class Kind { cressie_read, dpd, likelihood };
    Kind kind = Kind::cressie_read;
    double gamma = 0.5;  // cressie_read; 0 and 1 select the log limit cases
    double a = 0.5;      // dpd, must be > 0

    static DivergenceSpec cressie_read(double gamma);
    static DivergenceSpec dpd(double a);
    static DivergenceSpec likelihood();
};

// phi_gamma(t) = (t^g - g t + g - 1) / (g (g-1)); t log t - t + 1 at g = 1;
// -log t + t - 1 at g = 0. Nonnegative, zero only at t = 1.
// Returns +inf for t = 0 with g <= 0 (the divergence value).
double cressie_read_phi(double gamma, double t);

// d/dt of the above: (t^{g-1} - 1)/(g-1); log t at g = 1; 1 - 1/t at g = 0.
double cressie_read_phi_prime(double gamma, double t);

// phi#(t) = t phi'(t) - phi(t), which collapses to (t^g - 1)/g (log t at g=0).
double cressie_read_phi_sharp(double gamma, double t);

struct ProximalSpec {
    std::function<double(double)> psi;
    std::function<double(double)> psi_prime;
    std::string name;
};

// psi(t) = (sqrt(t) - 1)^2 / 2, the experimental default.
double default_psi(double t);
double default_psi_prime(double t);  // -inf at t = 0
ProximalSpec make_default_psi();

// psi(t) = -log t + t - 1, the choice that reduces the one-step scheme to EM.
ProximalSpec make_kl_psi();

}  // namespace divprox::divergence
