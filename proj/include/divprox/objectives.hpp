#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "divprox/divergence.hpp"
#include "divprox/kde.hpp"
#include "divprox/models.hpp"
#include "divprox/numerics.hpp"

// Estimated divergence criteria: the classical dual (supremal) form, the
// kernel-smoothed dual form, the density power objective, the log-likelihood,
// and the proximal term computed on label posteriors.

namespace divprox::objectives {

struct EstimatorSpec {
    enum class Kind { classical_dual, kernel_dual, mdpd, log_likelihood };
    Kind kind = Kind::classical_dual;
    divergence::DivergenceSpec div = divergence::DivergenceSpec::cressie_read(0.5);
    kde::KernelSpec kernel{};

    // alpha-search box for the classical dual; empty means the model box
    std::vector<double> inner_lo, inner_hi;
    numerics::OptimizerOptions inner_opt{300, 1e-5, 1e-9, 0.1};
    int inner_segments = 12;  // 1-D sup is scanned in this many Brent brackets
    // compact kernels put a kink at every observation edge, so objective
    // quadratures get a deeper subdivision budget than the numerics default
    numerics::QuadratureOptions quad{1e-9, 1e-7, 1000, 20};

    static EstimatorSpec classical_dual(double gamma);
    static EstimatorSpec kernel_dual(double gamma, kde::KernelSpec k);
    static EstimatorSpec mdpd(double a);
    static EstimatorSpec log_likelihood();
    const char* kind_name() const;
};

struct QuadDiagnostics {
    double error_estimate = 0.0;
    long long evaluations = 0;
    numerics::QuadStatus status = numerics::QuadStatus::ok;
};

struct ObjectiveValue {
    double value = std::numeric_limits<double>::quiet_NaN();
    std::optional<models::ParamPoint> inner_argmax;  // classical dual only
    QuadDiagnostics quad;
    bool flagged = false;
    std::string flag_reason;
    bool usable() const { return !flagged && std::isfinite(value); }
};

struct Admissibility {
    bool ok = true;
    std::string condition = "ok";
};

// Static rules (model x estimator family).
Admissibility check_admissible(const models::ModelSpec& m, const EstimatorSpec& e);
// Shape-dependent rules evaluated at a parameter point.
Admissibility check_admissible_at(const models::ModelSpec& m, const EstimatorSpec& e,
                                  const models::ParamPoint& p);

// f(alpha, phi) of the supremal dual form: the integral term minus the sample
// mean of phi#. -inf signals an analytic domain wall (Weibull, gamma < 0).
double dual_inner(const models::ModelSpec& m, const models::ParamPoint& phi,
                  const models::ParamPoint& alpha, const models::Sample& s,
                  double gamma, const numerics::QuadratureOptions& qopt,
                  QuadDiagnostics* diag = nullptr);

// sup over alpha of dual_inner via multi-start Nelder-Mead (Brent in 1-D);
// `starts` always gets phi itself prepended, so the value is >= 0 up to
// optimizer slack. The default start list adds the box midpoint.
ObjectiveValue classical_dual_estimate(const models::ModelSpec& m,
                                       const models::ParamPoint& phi,
                                       const models::Sample& s, double gamma,
                                       const EstimatorSpec& spec,
                                       std::span<const models::ParamPoint> starts);
ObjectiveValue classical_dual_estimate(const models::ModelSpec& m,
                                       const models::ParamPoint& phi,
                                       const models::Sample& s, double gamma,
                                       const EstimatorSpec& spec);

ObjectiveValue kernel_dual_estimate(const models::ModelSpec& m,
                                    const models::ParamPoint& phi,
                                    const models::Sample& s, double gamma,
                                    const kde::Kde& k,
                                    const numerics::QuadratureOptions& qopt);

// Same criterion against an arbitrary nonparametric density evaluator over an
// explicit window (the KDE path routes through this).
using DensityFn =
    std::function<void(std::span<const double> x, std::span<double> out)>;
ObjectiveValue kernel_dual_with_estimate(const models::ModelSpec& m,
                                         const models::ParamPoint& phi,
                                         const models::Sample& s, double gamma,
                                         const DensityFn& estimate,
                                         numerics::Interval window,
                                         const numerics::QuadratureOptions& qopt);

ObjectiveValue mdpd_objective(const models::ModelSpec& m,
                              const models::ParamPoint& phi,
                              const models::Sample& s, double a,
                              const numerics::QuadratureOptions& qopt);

// Unnormalized sum of log densities; -inf when an observation has density 0.
double log_likelihood(const models::ModelSpec& m, const models::ParamPoint& phi,
                      const models::Sample& s);

// (1/n) sum_i integral psi(h_i(x|phi)/h_i(x|prev)) h_i(x|prev) dx; the label
// integral is a two-term sum for mixtures and a quadrature for Cauchy.
double proximal_term(const models::ModelSpec& m, const models::ParamPoint& phi,
                     const models::ParamPoint& prev, const models::Sample& s,
                     const divergence::ProximalSpec& psi,
                     const numerics::QuadratureOptions& qopt);

std::vector<double> proximal_term_gradient(const models::ModelSpec& m,
                                           const models::ParamPoint& phi,
                                           const models::ParamPoint& prev,
                                           const models::Sample& s,
                                           const divergence::ProximalSpec& psi,
                                           const numerics::QuadratureOptions& qopt);

// Estimator bound to one (model, sample) pair, as the proximal runs use it.
// For the classical dual it tracks the inner argmax found at the head of the
// current proximal iteration and reuses it as a warm start, keeping each
// evaluation deterministic given the refresh history.
class Objective {
  public:
    Objective(const models::ModelSpec& m, const EstimatorSpec& spec,
              const models::Sample& s);

    // Adds phi0 to the full multi-start list used by refresh().
    void set_anchor(const models::ParamPoint& phi0);

    // Full-strength evaluation (all starts); updates the warm inner argmax.
    ObjectiveValue refresh(const models::ParamPoint& phi);

    // Evaluation with the frozen warm start ({phi, warm} for the dual sup).
    ObjectiveValue eval(const models::ParamPoint& phi) const;

    const models::ModelSpec& model() const { return model_; }
    const EstimatorSpec& spec() const { return spec_; }
    const models::Sample& sample() const { return sample_; }
    const kde::Kde* kernel_estimate() const { return kde_ ? &*kde_ : nullptr; }

  private:
    ObjectiveValue eval_with_starts(const models::ParamPoint& phi,
                                    std::span<const models::ParamPoint> starts,
                                    bool optimize_from_phi) const;

    models::ModelSpec model_;
    EstimatorSpec spec_;
    models::Sample sample_;
    std::optional<kde::Kde> kde_;
    std::optional<models::ParamPoint> anchor_;
    std::optional<models::ParamPoint> warm_;
};

// Subdensity objectives backing the initialization conditions: the model with
// one component removed (weight w on the surviving component `keep`).
double boundary_loglik(const models::ModelSpec& m, const models::Sample& s,
                       int keep, double theta);
double boundary_mdpd(const models::ModelSpec& m, const models::Sample& s,
                     int keep, double w, double theta, double a,
                     const numerics::QuadratureOptions& qopt);
double boundary_kernel_dual(const models::ModelSpec& m, const models::Sample& s,
                            int keep, double w, double theta, double gamma,
                            const kde::Kde& k,
                            const numerics::QuadratureOptions& qopt);

}  // namespace divprox::objectives
