#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "divprox/divergence.hpp"
#include "divprox/models.hpp"
#include "divprox/numerics.hpp"
#include "divprox/objectives.hpp"

// Proximal-point iterations on estimated divergences: the one-step scheme,
// the two-step weights/components scheme, and the closed-form EM special case.

namespace divprox::proximal {

struct StopRule {
    double param_tol = 1e-6;
    double objective_tol = 1e-8;
    int max_iters = 200;
};

enum class Variant { one_step, two_step, closed_form_em };

struct AlgorithmSpec {
    Variant variant = Variant::one_step;
    divergence::ProximalSpec psi = divergence::make_default_psi();
    StopRule stop{};
    numerics::OptimizerOptions outer_opt{350, 1e-6, 1e-12, 0.05};
    numerics::QuadratureOptions prox_quad{};
    int polish_restarts = 1;  // extra Nelder-Mead restarts at the incumbent
};

enum class Termination {
    param_tol,
    objective_tol,
    no_decrease,
    max_iters,
    failure,
};
const char* termination_name(Termination t);

struct IterateTrace {
    std::vector<models::ParamPoint> points;
    std::vector<double> objective_values;  // estimated divergence at each point
    std::vector<double> proximal_values;   // D_psi(point[k], point[k-1])
    std::vector<double> step_norms;
    // two-step composite values after each stage, one entry per accepted step
    std::vector<double> lambda_stage, theta_stage;
    Termination termination = Termination::max_iters;
    std::string failure_reason;

    const models::ParamPoint& final_point() const { return points.back(); }
    std::size_t iterations() const { return points.size() - 1; }
    void to_csv(std::ostream& os) const;
};

IterateTrace one_step_run(const models::ModelSpec& m,
                          const objectives::EstimatorSpec& est,
                          const models::Sample& s,
                          const models::ParamPoint& phi0,
                          const AlgorithmSpec& algo);

IterateTrace two_step_run(const models::ModelSpec& m,
                          const objectives::EstimatorSpec& est,
                          const models::Sample& s,
                          const models::ParamPoint& phi0,
                          const AlgorithmSpec& algo);

// Exact EM recurrence for the Gaussian mixture under the likelihood
// objective; the trace records -(1/n) log-likelihood so the monotone-decrease
// contract matches the other runs.
IterateTrace closed_form_em(const models::ModelSpec& m, const models::Sample& s,
                            const models::ParamPoint& phi0,
                            const AlgorithmSpec& algo);

IterateTrace run(const models::ModelSpec& m, const objectives::EstimatorSpec& est,
                 const models::Sample& s, const models::ParamPoint& phi0,
                 const AlgorithmSpec& algo);

struct InitCheck {
    bool ok = true;
    std::string condition = "ok";
    double margin = 0.0;  // positive slack when the condition holds
};

// Compares the objective at phi0 with the relevant boundary supremum or
// infimum (single-component degenerate limits), evaluated numerically.
InitCheck check_initialization(const models::ModelSpec& m,
                               const objectives::EstimatorSpec& est,
                               const models::Sample& s,
                               const models::ParamPoint& phi0,
                               const numerics::QuadratureOptions& qopt = {});

}  // namespace divprox::proximal
