#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "divprox/numerics.hpp"

// The three incomplete-data models: densities, label posteriors, samplers,
// and feasible parameter boxes.

namespace divprox::models {

enum class ModelKind { gauss_mix2, weibull_mix2, cauchy_scale };

struct ModelSpec {
    ModelKind kind = ModelKind::gauss_mix2;
    double eta = 0.1;          // mixture weights live in [eta, 1-eta]
    std::array<double, 2> comp_lo{};  // feasible box of component parameters
    std::array<double, 2> comp_hi{};

    static ModelSpec gauss_mix2(double eta = 0.1, double mu_lo = -20.0,
                                double mu_hi = 20.0);
    static ModelSpec weibull_mix2(double eta = 0.1, double shape_floor = 0.01,
                                  double shape_hi = 30.0);
    static ModelSpec cauchy_scale(double eps = 0.01, double a_hi = 200.0);

    int dim() const;        // flat parameter count (3, 3, 1)
    int n_components() const;
    numerics::Interval support() const;
};

// Mixture weights (lambda, 1-lambda) plus component parameters: means for the
// Gaussian mixture, shapes for the Weibull mixture, the scale for Cauchy.
struct ParamPoint {
    std::vector<double> weights;
    std::vector<double> component_params;

    std::vector<double> flat() const;  // (lambda, c1, c2) or (a)
    static ParamPoint from_flat(const ModelSpec& m, std::span<const double> x);
};

struct Sample {
    std::vector<double> y;
    std::uint64_t seed = 0;
    std::string provenance = "clean";

    std::size_t size() const { return y.size(); }
    void save_csv(std::ostream& os) const;
    static Sample load_csv(std::istream& is);
};

// Deterministic per-run random stream (fixed algorithms, engine-portable).
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : eng_(seed) {}
    double uniform();  // strictly inside (0, 1)
    double uniform(double a, double b);
    double normal();
    double weibull(double shape, double scale);
    double cauchy(double scale);
    std::uint64_t next_raw() { return eng_(); }

  private:
    std::mt19937_64 eng_;
};

double density(const ModelSpec& m, const ParamPoint& p, double y);
void density_batch(const ModelSpec& m, const ParamPoint& p,
                   std::span<const double> y, std::span<double> out);

// Unweighted component densities (mixtures only).
void component_density_batch(const ModelSpec& m, const ParamPoint& p,
                             std::span<const double> y, std::span<double> f1,
                             std::span<double> f2);

// Posteriors of both labels at every observation; throws on a zero marginal.
struct MixturePosteriors {
    std::vector<double> h1, h2;
};
MixturePosteriors mixture_posteriors(const ModelSpec& m, const ParamPoint& p,
                                     std::span<const double> y);

// h_i(x | phi). Mixtures: x is the component label (1 or 2). Cauchy: x >= 0
// is the continuous label, h(x|a) = y^2 e^x (a^2+y^2) / (a^2 + e^x y^2)^2.
double label_posterior(const ModelSpec& m, const ParamPoint& p, double y,
                       double x);

// Gradient of the label posterior in the flat parameters.
std::vector<double> label_posterior_grad(const ModelSpec& m, const ParamPoint& p,
                                         double y, double x);

Sample sample(const ModelSpec& m, const ParamPoint& p, std::size_t n,
              RngStream& rng);

bool is_feasible(const ModelSpec& m, const ParamPoint& p);
ParamPoint feasible_project(const ModelSpec& m, std::span<const double> raw);

double cdf(const ModelSpec& m, const ParamPoint& p, double y);
double quantile(const ModelSpec& m, const ParamPoint& p, double q);

}  // namespace divprox::models
