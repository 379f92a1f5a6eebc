#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "divprox/models.hpp"
#include "divprox/numerics.hpp"
#include "divprox/objectives.hpp"
#include "divprox/proximal.hpp"

// Monte-Carlo harness: contamination schemes, density-level error metrics,
// repeated-run summaries, and table emission.

namespace divprox::experiment {

enum class Contamination { none, gaussian_tails, weibull_replace };
const char* contamination_name(Contamination c);

struct ExperimentConfig {
    models::ModelSpec model = models::ModelSpec::gauss_mix2();
    models::ParamPoint truth;
    int n = 100;
    int runs = 100;
    objectives::EstimatorSpec estimator;
    proximal::AlgorithmSpec algorithm;
    Contamination contamination = Contamination::none;
    std::uint64_t base_seed = 1;

    enum class Phi0Policy { fixed, truth_perturbed };
    Phi0Policy policy = Phi0Policy::truth_perturbed;
    models::ParamPoint phi0_fixed;  // used by the fixed policy
    double perturbation = 0.1;
    bool enforce_init_check = true;
    int init_retries = 10;

    int threads = 0;  // 0 picks hardware concurrency
    numerics::QuadratureOptions metric_quad{};
    std::string label;
};

struct RunRecord {
    models::ParamPoint estimate;
    double tvd = 0.0;
    double sqrt_chi2 = 0.0;
    bool chi2_finite = false;
    int iterations = 0;
    bool failed = false;
    std::string failure;
    bool monotone_ok = true;  // objective nonincreasing along the trace
    bool sublevel_ok = true;  // every iterate inside the initial sublevel set
    proximal::Termination termination = proximal::Termination::max_iters;
};

struct ExperimentSummary {
    std::string label, estimator_name, algorithm_name;
    int runs = 0;
    std::vector<RunRecord> records;
    double mean_tvd = 0.0, sd_tvd = 0.0;
    double mean_sqrt_chi2 = 0.0, sd_sqrt_chi2 = 0.0;
    double mean_iterations = 0.0;
    int failures = 0;
    int chi2_infinite = 0;
    bool all_monotone = true;
    bool all_sublevel = true;
};

// Total variation distance between the two parameterized densities,
// (1/2) integral |p_a - p_b|.
double tvd_error(const models::ModelSpec& m, const models::ParamPoint& a,
                 const models::ParamPoint& b,
                 const numerics::QuadratureOptions& qopt = {});

struct Chi2Result {
    double value = 0.0;
    bool finite = true;  // Weibull pairs routinely diverge; that is a flag
};
// integral (p_hat - p_true)^2 / p_true.
Chi2Result chi2_error(const models::ModelSpec& m, const models::ParamPoint& hat,
                      const models::ParamPoint& truth,
                      const numerics::QuadratureOptions& qopt = {});

// Replaces the 5 lowest observations with U[-5,-2] draws and the 5 largest
// with U[2,5] draws; n stays fixed.
models::Sample contaminate_gaussian(const models::Sample& s, models::RngStream& rng);

// Replaces 10 uniformly chosen observations with Weibull(0.9, scale 3) draws.
models::Sample contaminate_weibull(const models::Sample& s, models::RngStream& rng);

// Mixture components sorted by component parameter (reporting convention).
models::ParamPoint canonicalize(const models::ModelSpec& m,
                                const models::ParamPoint& p);

ExperimentSummary run_monte_carlo(const ExperimentConfig& cfg);

void emit_table_csv(std::span<const ExperimentSummary> rows, std::ostream& os);
void emit_table_text(std::span<const ExperimentSummary> rows, std::ostream& os);

// Minimal CSV reader for the emitted tables (header + rows of cells).
std::vector<std::vector<std::string>> read_csv(std::istream& is);

}  // namespace divprox::experiment
