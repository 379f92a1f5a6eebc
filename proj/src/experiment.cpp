#include "divprox/experiment.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace divprox::experiment {

using models::ModelKind;
using models::ModelSpec;
using models::ParamPoint;
using models::RngStream;
using models::Sample;
using numerics::BatchIntegrand;
using numerics::IntegralResult;
using numerics::Interval;
using numerics::QuadratureOptions;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

const char* contamination_name(Contamination c) {
    switch (c) {
        case Contamination::none: return "none";
        case Contamination::gaussian_tails: return "gaussian_tails";
        case Contamination::weibull_replace: return "weibull_replace";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

namespace {

Interval metric_window(const ModelSpec& m, const ParamPoint& a, const ParamPoint& b) {
    if (m.kind != ModelKind::gauss_mix2) return m.support();
    double lo = kInf, hi = -kInf;
    for (const ParamPoint* p : {&a, &b})
        for (double c : p->component_params) {
            lo = std::min(lo, c);
            hi = std::max(hi, c);
        }
    return {lo - 12.0, hi + 12.0};
}

IntegralResult integrate_metric(const ModelSpec& m, const BatchIntegrand& f,
                                Interval iv, const QuadratureOptions& qopt) {
    if (m.kind == ModelKind::weibull_mix2) {
        // x = e^v keeps the origin singularity out of the panels
        BatchIntegrand g = [&f](std::span<const double> v, std::span<double> out) {
            double xs[64];
            for (std::size_t i = 0; i < v.size(); ++i) xs[i] = std::exp(v[i]);
            f(std::span<const double>(xs, v.size()), out);
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (xs[i] > 0.0 && std::isfinite(xs[i]))
                    out[i] *= xs[i];
                else
                    out[i] = 0.0;
            }
        };
        return numerics::integrate(g, Interval{-kInf, kInf}, qopt);
    }
    return numerics::integrate(f, iv, qopt);
}

}  // namespace

double tvd_error(const ModelSpec& m, const ParamPoint& a, const ParamPoint& b,
                 const QuadratureOptions& qopt) {
    BatchIntegrand f = [&](std::span<const double> xs, std::span<double> out) {
        double pa[64], pb[64];
        models::density_batch(m, a, xs, std::span<double>(pa, xs.size()));
        models::density_batch(m, b, xs, std::span<double>(pb, xs.size()));
        for (std::size_t i = 0; i < xs.size(); ++i) out[i] = std::abs(pa[i] - pb[i]);
    };
    const IntegralResult ir = integrate_metric(m, f, metric_window(m, a, b), qopt);
    if (!ir.ok() && ir.status != numerics::QuadStatus::tolerance_not_met)
        throw std::runtime_error("tvd_error: quadrature failed");
    return 0.5 * ir.value;
}

Chi2Result chi2_error(const ModelSpec& m, const ParamPoint& hat,
                      const ParamPoint& truth, const QuadratureOptions& qopt) {
    BatchIntegrand f = [&](std::span<const double> xs, std::span<double> out) {
        double ph[64], pt[64];
        models::density_batch(m, hat, xs, std::span<double>(ph, xs.size()));
        models::density_batch(m, truth, xs, std::span<double>(pt, xs.size()));
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (pt[i] > 0.0) {
                const double d = ph[i] - pt[i];
                out[i] = d * d / pt[i];
            } else {
                out[i] = ph[i] > 0.0 ? kInf : 0.0;
            }
        }
    };
    const IntegralResult ir = integrate_metric(m, f, metric_window(m, hat, truth), qopt);
    if (!ir.ok()) return {kInf, false};
    return {ir.value, true};
}

// ---------------------------------------------------------------------------
// contamination
// ---------------------------------------------------------------------------

Sample contaminate_gaussian(const Sample& s, RngStream& rng) {
    const std::size_t n = s.size();
    if (n < 10) throw std::invalid_argument("contaminate_gaussian: need n >= 10");
    Sample out = s;
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return s.y[a] < s.y[b]; });

    std::array<std::size_t, 5> low{}, high{};
    for (std::size_t k = 0; k < 5; ++k) {
        low[k] = idx[k];
        high[k] = idx[n - 5 + k];
    }
    std::sort(low.begin(), low.end());
    std::sort(high.begin(), high.end());
    for (std::size_t i : low) out.y[i] = rng.uniform(-5.0, -2.0);
    for (std::size_t i : high) out.y[i] = rng.uniform(2.0, 5.0);
    out.provenance = "contaminated:gaussian_tails";
    return out;
}

Sample contaminate_weibull(const Sample& s, RngStream& rng) {
    const std::size_t n = s.size();
    if (n < 10) throw std::invalid_argument("contaminate_weibull: need n >= 10");
    Sample out = s;
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < 10; ++i) {
        const std::size_t j =
            i + static_cast<std::size_t>(rng.uniform() * static_cast<double>(n - i));
        std::swap(idx[i], idx[std::min(j, n - 1)]);
    }
    std::vector<std::size_t> chosen(idx.begin(), idx.begin() + 10);
    std::sort(chosen.begin(), chosen.end());
    for (std::size_t i : chosen) out.y[i] = rng.weibull(0.9, 3.0);
    out.provenance = "contaminated:weibull_replace";
    return out;
}

ParamPoint canonicalize(const ModelSpec& m, const ParamPoint& p) {
    if (m.kind == ModelKind::cauchy_scale) return p;
    if (p.component_params[0] <= p.component_params[1]) return p;
    ParamPoint q;
    q.weights = {p.weights[1], p.weights[0]};
    q.component_params = {p.component_params[1], p.component_params[0]};
    return q;
}

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

namespace {

ParamPoint perturb(const ModelSpec& m, const ParamPoint& truth, double rel,
                   RngStream& rng) {
    std::vector<double> x = truth.flat();
    for (double& v : x) v *= 1.0 + rel * rng.uniform(-1.0, 1.0);
    return models::feasible_project(m, x);
}

RunRecord one_run(const ExperimentConfig& cfg, int run_idx) {
    RunRecord rec;
    RngStream rng(cfg.base_seed + static_cast<std::uint64_t>(run_idx));
    Sample s = models::sample(cfg.model, cfg.truth, static_cast<std::size_t>(cfg.n), rng);
    s.seed = cfg.base_seed + static_cast<std::uint64_t>(run_idx);
    if (cfg.contamination == Contamination::gaussian_tails)
        s = contaminate_gaussian(s, rng);
    else if (cfg.contamination == Contamination::weibull_replace)
        s = contaminate_weibull(s, rng);

    ParamPoint phi0;
    if (cfg.policy == ExperimentConfig::Phi0Policy::fixed) {
        phi0 = cfg.phi0_fixed;
    } else {
        bool found = false;
        for (int attempt = 0; attempt <= cfg.init_retries; ++attempt) {
            phi0 = perturb(cfg.model, cfg.truth, cfg.perturbation, rng);
            if (!cfg.enforce_init_check) {
                found = true;
                break;
            }
            try {
                const proximal::InitCheck c =
                    proximal::check_initialization(cfg.model, cfg.estimator, s, phi0);
                if (c.ok) {
                    found = true;
                    break;
                }
            } catch (const std::exception&) {
                // boundary search failure counts as a failed attempt
            }
        }
        if (!found) {
            rec.failed = true;
            rec.failure = "init-check-failed";
            return rec;
        }
    }

    proximal::IterateTrace tr;
    try {
        tr = proximal::run(cfg.model, cfg.estimator, s, phi0, cfg.algorithm);
    } catch (const std::exception& e) {
        rec.failed = true;
        rec.failure = e.what();
        return rec;
    }
    rec.termination = tr.termination;
    if (tr.termination == proximal::Termination::failure || tr.points.empty()) {
        rec.failed = true;
        rec.failure = tr.failure_reason.empty() ? "run-failed" : tr.failure_reason;
        return rec;
    }

    for (std::size_t k = 1; k < tr.objective_values.size(); ++k) {
        if (tr.objective_values[k] > tr.objective_values[k - 1] + 1e-8)
            rec.monotone_ok = false;
        if (tr.objective_values[k] > tr.objective_values[0] + 1e-8)
            rec.sublevel_ok = false;
    }
    rec.iterations = static_cast<int>(tr.iterations());
    rec.estimate = canonicalize(cfg.model, tr.final_point());
    rec.tvd = tvd_error(cfg.model, tr.final_point(), cfg.truth, cfg.metric_quad);
    const Chi2Result c2 = chi2_error(cfg.model, tr.final_point(), cfg.truth,
                                     cfg.metric_quad);
    rec.chi2_finite = c2.finite;
    rec.sqrt_chi2 = c2.finite ? std::sqrt(c2.value) : kInf;
    return rec;
}

void mean_sd(const std::vector<double>& v, double& mean, double& sd) {
    mean = sd = 0.0;
    if (v.empty()) return;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    if (v.size() < 2) return;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
}

const char* algorithm_name(const proximal::AlgorithmSpec& a) {
    switch (a.variant) {
        case proximal::Variant::one_step: return "one_step";
        case proximal::Variant::two_step: return "two_step";
        case proximal::Variant::closed_form_em: return "em";
    }
    return "?";
}

}  // namespace

ExperimentSummary run_monte_carlo(const ExperimentConfig& cfg) {
    if (cfg.runs < 1) throw std::invalid_argument("run_monte_carlo: runs >= 1");
    ExperimentSummary sum;
    sum.label = cfg.label;
    sum.estimator_name = cfg.estimator.kind_name();
    sum.algorithm_name = algorithm_name(cfg.algorithm);
    sum.runs = cfg.runs;
    sum.records.resize(static_cast<std::size_t>(cfg.runs));

    unsigned nthreads = cfg.threads > 0
                            ? static_cast<unsigned>(cfg.threads)
                            : std::max(1u, std::thread::hardware_concurrency());
    nthreads = std::min<unsigned>(nthreads, static_cast<unsigned>(cfg.runs));
    if (nthreads <= 1) {
        for (int r = 0; r < cfg.runs; ++r)
            sum.records[static_cast<std::size_t>(r)] = one_run(cfg, r);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (unsigned t = 0; t < nthreads; ++t)
            pool.emplace_back([&] {
                for (int r = next.fetch_add(1); r < cfg.runs; r = next.fetch_add(1))
                    sum.records[static_cast<std::size_t>(r)] = one_run(cfg, r);
            });
        for (std::thread& t : pool) t.join();
    }

    std::vector<double> tvds, chis, iters;
    for (const RunRecord& r : sum.records) {
        if (r.failed) {
            ++sum.failures;
            continue;
        }
        tvds.push_back(r.tvd);
        iters.push_back(static_cast<double>(r.iterations));
        if (r.chi2_finite)
            chis.push_back(r.sqrt_chi2);
        else
            ++sum.chi2_infinite;
        sum.all_monotone = sum.all_monotone && r.monotone_ok;
        sum.all_sublevel = sum.all_sublevel && r.sublevel_ok;
    }
    mean_sd(tvds, sum.mean_tvd, sum.sd_tvd);
    mean_sd(chis, sum.mean_sqrt_chi2, sum.sd_sqrt_chi2);
    double mi, dummy;
    mean_sd(iters, mi, dummy);
    sum.mean_iterations = mi;
    return sum;
}

// ---------------------------------------------------------------------------
// tables
// ---------------------------------------------------------------------------

namespace {

std::string fmt4(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

const char* kHeader[] = {"label",         "estimator",     "algorithm",
                         "runs",          "failures",      "mean_tvd",
                         "sd_tvd",        "mean_sqrt_chi2", "sd_sqrt_chi2",
                         "chi2_infinite", "mean_iterations"};

std::vector<std::string> row_cells(const ExperimentSummary& s) {
    const bool chi_all_inf = s.chi2_infinite > 0 &&
                             s.chi2_infinite + s.failures >= s.runs;
    return {s.label,
            s.estimator_name,
            s.algorithm_name,
            std::to_string(s.runs),
            std::to_string(s.failures),
            fmt4(s.mean_tvd),
            fmt4(s.sd_tvd),
            chi_all_inf ? "inf" : fmt4(s.mean_sqrt_chi2),
            chi_all_inf ? "inf" : fmt4(s.sd_sqrt_chi2),
            std::to_string(s.chi2_infinite),
            fmt4(s.mean_iterations)};
}

}  // namespace

void emit_table_csv(std::span<const ExperimentSummary> rows, std::ostream& os) {
    if (rows.empty()) throw std::invalid_argument("emit_table_csv: no rows");
    for (std::size_t i = 0; i < std::size(kHeader); ++i)
        os << (i ? "," : "") << kHeader[i];
    os << "\n";
    for (const ExperimentSummary& s : rows) {
        const std::vector<std::string> cells = row_cells(s);
        for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
        os << "\n";
    }
}

void emit_table_text(std::span<const ExperimentSummary> rows, std::ostream& os) {
    if (rows.empty()) throw std::invalid_argument("emit_table_text: no rows");
    std::vector<std::vector<std::string>> all;
    all.emplace_back(std::begin(kHeader), std::end(kHeader));
    for (const ExperimentSummary& s : rows) all.push_back(row_cells(s));
    std::vector<std::size_t> width(all[0].size(), 0);
    for (const auto& row : all)
        for (std::size_t i = 0; i < row.size(); ++i)
            width[i] = std::max(width[i], row[i].size());
    for (const auto& row : all) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            os << row[i];
            if (i + 1 < row.size())
                os << std::string(width[i] - row[i].size() + 2, ' ');
        }
        os << "\n";
    }
}

std::vector<std::vector<std::string>> read_csv(std::istream& is) {
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

}  // namespace divprox::experiment
