// Command-line front end: fit one sample, dump iterate traces, run the
// Monte-Carlo harness, or evaluate an initialization condition.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>

#include "divprox/experiment.hpp"

namespace {

using namespace divprox;

struct Options {
    std::string model = "gauss";
    std::vector<double> truth;
    int n = 100;
    int runs = 100;
    std::string estimator = "classical";
    double gamma = 0.5;
    double a = 0.5;
    std::string kernel = "gaussian";
    double bandwidth = 0.0;  // 0 selects Silverman
    std::string algorithm = "one-step";
    std::string psi = "default";
    std::string contamination = "none";
    std::uint64_t seed = 1;
    double param_tol = 1e-6;
    double objective_tol = 1e-8;
    int max_iters = 200;
    double quad_abs_tol = 1e-9;
    double quad_rel_tol = 1e-7;
    std::vector<double> phi0;
    bool no_init_check = false;
    int threads = 0;
    std::string data;  // sample CSV; empty simulates from truth
    std::string out;
    std::string label;
};

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("--model", o.model, "gauss | weibull | cauchy");
    cmd->add_option("--truth", o.truth,
                    "data-generating parameters (lambda,c1,c2 or a)")
        ->delimiter(',');
    cmd->add_option("--n", o.n, "sample size");
    cmd->add_option("--estimator", o.estimator,
                    "classical | kernel | mdpd | mle");
    cmd->add_option("--gamma", o.gamma, "Cressie-Read index");
    cmd->add_option("--a", o.a, "density power exponent");
    cmd->add_option("--kernel", o.kernel, "gaussian | epanechnikov | cauchy");
    cmd->add_option("--bandwidth", o.bandwidth, "0 = Silverman rule");
    cmd->add_option("--algorithm", o.algorithm, "one-step | two-step | em");
    cmd->add_option("--psi", o.psi, "default | kl");
    cmd->add_option("--contamination", o.contamination,
                    "none | gaussian | weibull");
    cmd->add_option("--seed", o.seed, "base seed");
    cmd->add_option("--param-tol", o.param_tol, "stop on step norm");
    cmd->add_option("--objective-tol", o.objective_tol, "stop on decrease");
    cmd->add_option("--max-iters", o.max_iters, "iteration cap");
    cmd->add_option("--quad-abs-tol", o.quad_abs_tol, "quadrature abs tol");
    cmd->add_option("--quad-rel-tol", o.quad_rel_tol, "quadrature rel tol");
    cmd->add_option("--phi0", o.phi0, "fixed initial point")->delimiter(',');
    cmd->add_flag("--no-init-check", o.no_init_check,
                  "skip the initialization condition");
    cmd->add_option("--threads", o.threads, "worker threads (0 = hardware)");
    cmd->add_option("--data", o.data, "sample CSV instead of simulation");
    cmd->add_option("--out", o.out, "output CSV path");
    cmd->add_option("--label", o.label, "table row label");
    cmd->set_config("--config", "", "flat key=value config file");
}

models::ModelSpec parse_model(const Options& o) {
    if (o.model == "gauss") return models::ModelSpec::gauss_mix2();
    if (o.model == "weibull") return models::ModelSpec::weibull_mix2();
    if (o.model == "cauchy") return models::ModelSpec::cauchy_scale();
    throw CLI::ValidationError("--model", "unknown model " + o.model);
}

models::ParamPoint parse_point(const models::ModelSpec& m,
                               const std::vector<double>& v,
                               const char* what) {
    if (static_cast<int>(v.size()) != m.dim())
        throw CLI::ValidationError(what, "expected " + std::to_string(m.dim()) +
                                             " comma-separated values");
    return models::ParamPoint::from_flat(m, v);
}

models::ParamPoint default_truth(const models::ModelSpec& m) {
    if (m.kind == models::ModelKind::gauss_mix2)
        return models::ParamPoint::from_flat(m, std::vector<double>{0.35, 2.0, 1.5});
    if (m.kind == models::ModelKind::weibull_mix2)
        return models::ParamPoint::from_flat(m, std::vector<double>{0.35, 0.5, 3.0});
    return models::ParamPoint::from_flat(m, std::vector<double>{1.0});
}

objectives::EstimatorSpec parse_estimator(const Options& o) {
    kde::KernelSpec ks;
    if (o.kernel == "gaussian") ks.kind = kde::KernelKind::gaussian;
    else if (o.kernel == "epanechnikov") ks.kind = kde::KernelKind::epanechnikov;
    else if (o.kernel == "cauchy") ks.kind = kde::KernelKind::cauchy;
    else throw CLI::ValidationError("--kernel", "unknown kernel " + o.kernel);
    if (o.bandwidth > 0.0) ks.bandwidth = o.bandwidth;

    objectives::EstimatorSpec e;
    if (o.estimator == "classical")
        e = objectives::EstimatorSpec::classical_dual(o.gamma);
    else if (o.estimator == "kernel")
        e = objectives::EstimatorSpec::kernel_dual(o.gamma, ks);
    else if (o.estimator == "mdpd")
        e = objectives::EstimatorSpec::mdpd(o.a);
    else if (o.estimator == "mle")
        e = objectives::EstimatorSpec::log_likelihood();
    else
        throw CLI::ValidationError("--estimator", "unknown estimator " + o.estimator);
    e.quad.abs_tol = o.quad_abs_tol;
    e.quad.rel_tol = o.quad_rel_tol;
    return e;
}

proximal::AlgorithmSpec parse_algorithm(const Options& o) {
    proximal::AlgorithmSpec a;
    if (o.algorithm == "one-step") a.variant = proximal::Variant::one_step;
    else if (o.algorithm == "two-step") a.variant = proximal::Variant::two_step;
    else if (o.algorithm == "em") a.variant = proximal::Variant::closed_form_em;
    else throw CLI::ValidationError("--algorithm", "unknown algorithm " + o.algorithm);
    if (o.psi == "default") a.psi = divergence::make_default_psi();
    else if (o.psi == "kl") a.psi = divergence::make_kl_psi();
    else throw CLI::ValidationError("--psi", "unknown psi " + o.psi);
    a.stop.param_tol = o.param_tol;
    a.stop.objective_tol = o.objective_tol;
    a.stop.max_iters = o.max_iters;
    return a;
}

experiment::Contamination parse_contamination(const Options& o) {
    if (o.contamination == "none") return experiment::Contamination::none;
    if (o.contamination == "gaussian")
        return experiment::Contamination::gaussian_tails;
    if (o.contamination == "weibull")
        return experiment::Contamination::weibull_replace;
    throw CLI::ValidationError("--contamination",
                               "unknown scheme " + o.contamination);
}

models::Sample resolve_sample(const Options& o, const models::ModelSpec& m,
                              const models::ParamPoint& truth) {
    if (!o.data.empty()) {
        std::ifstream f(o.data);
        if (!f) throw std::runtime_error("cannot open sample file " + o.data);
        return models::Sample::load_csv(f);
    }
    models::RngStream rng(o.seed);
    models::Sample s = models::sample(m, truth, static_cast<std::size_t>(o.n), rng);
    s.seed = o.seed;
    const experiment::Contamination c = parse_contamination(o);
    if (c == experiment::Contamination::gaussian_tails)
        s = experiment::contaminate_gaussian(s, rng);
    else if (c == experiment::Contamination::weibull_replace)
        s = experiment::contaminate_weibull(s, rng);
    return s;
}

int cmd_fit(const Options& o, bool trace_only) {
    const models::ModelSpec m = parse_model(o);
    const models::ParamPoint truth =
        o.truth.empty() ? default_truth(m) : parse_point(m, o.truth, "--truth");
    const models::Sample s = resolve_sample(o, m, truth);
    const objectives::EstimatorSpec est = parse_estimator(o);
    const proximal::AlgorithmSpec algo = parse_algorithm(o);

    models::ParamPoint phi0 = truth;
    if (!o.phi0.empty()) phi0 = parse_point(m, o.phi0, "--phi0");
    if (!o.no_init_check) {
        const proximal::InitCheck c = proximal::check_initialization(m, est, s, phi0);
        if (!c.ok) {
            std::cerr << nlohmann::json{{"error", "initialization check violated"},
                                        {"condition", c.condition},
                                        {"margin", c.margin}}
                      << "\n";
            return 2;
        }
    }
    const proximal::IterateTrace tr = proximal::run(m, est, s, phi0, algo);
    if (tr.termination == proximal::Termination::failure) {
        std::cerr << nlohmann::json{{"error", "run failed"},
                                    {"reason", tr.failure_reason}}
                  << "\n";
        return 1;
    }
    const std::string out = o.out.empty() ? (trace_only ? "trace.csv" : "") : o.out;
    if (!out.empty()) {
        std::ofstream f(out);
        tr.to_csv(f);
    }
    if (!trace_only) {
        const models::ParamPoint est_p = experiment::canonicalize(m, tr.final_point());
        std::cout << "estimate:";
        for (double v : est_p.flat()) std::cout << " " << v;
        std::cout << "\nobjective: " << tr.objective_values.back()
                  << "\niterations: " << tr.iterations()
                  << "\ntermination: " << proximal::termination_name(tr.termination)
                  << "\n";
    } else {
        std::cout << "trace written (" << tr.points.size() << " points)\n";
    }
    return 0;
}

int cmd_mc(const Options& o) {
    experiment::ExperimentConfig cfg;
    cfg.model = parse_model(o);
    cfg.truth = o.truth.empty() ? default_truth(cfg.model)
                                : parse_point(cfg.model, o.truth, "--truth");
    cfg.n = o.n;
    cfg.runs = o.runs;
    cfg.estimator = parse_estimator(o);
    cfg.algorithm = parse_algorithm(o);
    cfg.contamination = parse_contamination(o);
    cfg.base_seed = o.seed;
    cfg.enforce_init_check = !o.no_init_check;
    cfg.threads = o.threads;
    cfg.label = o.label.empty() ? (o.model + "/" + o.estimator) : o.label;
    if (!o.phi0.empty()) {
        cfg.policy = experiment::ExperimentConfig::Phi0Policy::fixed;
        cfg.phi0_fixed = parse_point(cfg.model, o.phi0, "--phi0");
    }
    const experiment::ExperimentSummary sum = experiment::run_monte_carlo(cfg);
    const experiment::ExperimentSummary rows[] = {sum};
    experiment::emit_table_text(rows, std::cout);
    if (!o.out.empty()) {
        std::ofstream f(o.out);
        experiment::emit_table_csv(rows, f);
    }
    return sum.failures == cfg.runs ? 1 : 0;
}

int cmd_check_init(const Options& o) {
    const models::ModelSpec m = parse_model(o);
    const models::ParamPoint truth =
        o.truth.empty() ? default_truth(m) : parse_point(m, o.truth, "--truth");
    const models::Sample s = resolve_sample(o, m, truth);
    const objectives::EstimatorSpec est = parse_estimator(o);
    const models::ParamPoint phi0 =
        o.phi0.empty() ? truth : parse_point(m, o.phi0, "--phi0");
    const proximal::InitCheck c = proximal::check_initialization(m, est, s, phi0);
    std::cout << (c.ok ? "ok" : "violated") << " condition=" << c.condition
              << " margin=" << c.margin << "\n";
    return c.ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"robust minimum-divergence estimation via proximal iterations"};
    app.require_subcommand(1);
    Options o;

    CLI::App* fit = app.add_subcommand("fit", "estimate one sample");
    CLI::App* trace = app.add_subcommand("trace", "emit an iterate trace CSV");
    CLI::App* mc = app.add_subcommand("mc", "Monte-Carlo experiment table");
    CLI::App* ci = app.add_subcommand("check-init", "initialization condition");
    for (CLI::App* c : {fit, trace, mc, ci}) add_common(c, o);
    mc->add_option("--runs", o.runs, "number of repetitions");

    try {
        app.parse(argc, argv);
        if (app.got_subcommand(fit)) return cmd_fit(o, false);
        if (app.got_subcommand(trace)) return cmd_fit(o, true);
        if (app.got_subcommand(mc)) return cmd_mc(o);
        return cmd_check_init(o);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", e.what()}} << "\n";
        return 1;
    }
}
