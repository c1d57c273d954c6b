#include "vbc/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "vbc/errors.hpp"

namespace vbc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

nlohmann::json flags_echo(const RunFlags& flags) {
    return {{"correction_set", flags.correction_set},
            {"ghq_nodes", flags.ghq_nodes},
            {"exact_poisson", flags.exact_poisson},
            {"mcmc_iters", flags.mcmc_iters},
            {"mcmc_burnin", flags.mcmc_burnin},
            {"seed", flags.seed},
            {"tol", flags.tol},
            {"max_iter", flags.max_iter},
            {"correction_max_iter", flags.correction_max_iter}};
}

nlohmann::json config_echo(const ModelConfig& config, const RunFlags& flags) {
    return {{"model", config.echo}, {"flags", flags_echo(flags)}};
}

// Predictor rows first, then effect blocks; indices 1-based.
std::vector<LatentRecord> base_records(const GaussianApprox& ga) {
    std::vector<LatentRecord> records;
    records.reserve(ga.layout.m());
    for (int i = 0; i < ga.layout.n_obs; ++i) {
        LatentRecord r;
        r.index = i + 1;
        r.block = "eta";
        r.within = i + 1;
        r.mean_ga = ga.mu_eta[i];
        r.sd_ga = ga.S_eta[i];
        records.push_back(r);
    }
    const Eigen::VectorXd effect_var = marginal_variances(*ga.factor);
    for (const auto& blk : ga.layout.blocks) {
        for (int k = 0; k < blk.size; ++k) {
            LatentRecord r;
            r.index = ga.layout.n_obs + blk.offset + k + 1;
            r.block = blk.name;
            r.within = k + 1;
            r.mean_ga = ga.mu_effects[blk.offset + k];
            r.sd_ga = std::sqrt(effect_var[blk.offset + k]);
            records.push_back(r);
        }
    }
    return records;
}

nlohmann::json fit_convergence(const GaussianApprox& ga) {
    return {{"iterations", ga.iterations},
            {"converged", ga.converged},
            {"gradient_norm", ga.gradient_norm},
            {"newton_residual", ga.newton_residual}};
}

FitOptions fit_options(const RunFlags& flags) {
    FitOptions opt;
    opt.tol = flags.tol;
    opt.max_iter = flags.max_iter;
    return opt;
}

CorrectionOptions correction_options(const RunFlags& flags) {
    CorrectionOptions opt;
    opt.tol = flags.tol;
    opt.max_iter = flags.correction_max_iter;
    opt.ghq_order = flags.ghq_nodes;
    return opt;
}

}  // namespace

CorrectionSet parse_correction_set(const std::string& spec, const ModelSpec& model,
                                   const LatentLayout& layout) {
    if (spec == "fixed-effects" || spec.empty()) {
        return default_correction_set(model, layout);
    }
    CorrectionSet J;
    std::stringstream ss(spec);
    std::string token;
    while (std::getline(ss, token, ',')) {
        try {
            const int one_based = std::stoi(token);
            J.indices.push_back(one_based - 1);
        } catch (const std::exception&) {
            throw ConfigError("cannot parse correction-set entry '" + token + "'");
        }
    }
    if (J.indices.empty()) throw ConfigError("empty correction set");
    return J;
}

RunReport run_fit(const ModelConfig& config, const ObservationData& data,
                  const RunFlags& flags) {
    RunReport report;
    report.command = "fit";
    report.config_echo = config_echo(config, flags);
    const auto t0 = Clock::now();
    const GaussianApprox ga = fit_laplace(config.model, data, fit_options(flags));
    report.timing["fit_seconds"] = seconds_since(t0);
    report.convergence = fit_convergence(ga);
    report.records = base_records(ga);
    return report;
}

RunReport run_correct(const ModelConfig& config, const ObservationData& data,
                      const RunFlags& flags) {
    RunReport report;
    report.command = "correct";
    report.config_echo = config_echo(config, flags);

    const auto t0 = Clock::now();
    const GaussianApprox ga = fit_laplace(config.model, data, fit_options(flags));
    report.timing["fit_seconds"] = seconds_since(t0);
    report.convergence = fit_convergence(ga);
    report.records = base_records(ga);
    if (flags.correction_set == "none") {
        return report;
    }

    const CorrectionSet J = parse_correction_set(flags.correction_set, config.model, ga.layout);
    const auto t1 = Clock::now();
    const CorrectionResult corr =
        flags.exact_poisson
            ? vbc_correct_exact_poisson(ga, config.model, data, J, correction_options(flags))
            : vbc_correct(ga, config.model, data, J, correction_options(flags));
    report.timing["correct_seconds"] = seconds_since(t1);
    report.convergence["correction_iterations"] = corr.iterations;
    report.convergence["correction_converged"] = corr.converged;
    report.convergence["identity_residual"] = corr.identity_residual;
    report.convergence["objective_initial"] = corr.objective_trace.front();
    report.convergence["objective_final"] = corr.objective_trace.back();

    for (int i = 0; i < ga.layout.n_obs; ++i) {
        report.records[i].mean_vbc = corr.mu_star_eta[i];
    }
    for (int k = 0; k < ga.layout.m_star; ++k) {
        report.records[ga.layout.n_obs + k].mean_vbc = corr.mu_star_effects[k];
    }
    return report;
}

RunReport run_sample(const ModelConfig& config, const ObservationData& data,
                     const RunFlags& flags) {
    RunReport report;
    report.command = "sample";
    report.config_echo = config_echo(config, flags);

    const auto t0 = Clock::now();
    const GaussianApprox ga = fit_laplace(config.model, data, fit_options(flags));
    report.timing["fit_seconds"] = seconds_since(t0);
    report.convergence = fit_convergence(ga);
    report.records = base_records(ga);

    SamplerOptions opt;
    opt.iterations = flags.mcmc_iters;
    opt.burn_in = flags.mcmc_burnin;
    opt.seed = flags.seed;
    if (!flags.dump_chain.empty()) {
        opt.dump_path = flags.dump_chain;
        opt.dump_thin = flags.dump_thin > 0 ? flags.dump_thin : 100;
    }
    const auto t1 = Clock::now();
    const ChainSummary chain = sample_posterior(ga, make_likelihood_data(config.model, data), opt);
    report.timing["mcmc_seconds"] = seconds_since(t1);
    report.convergence["acceptance_rate"] = chain.acceptance_rate;
    report.convergence["min_ess"] = chain.ess.minCoeff();

    const Eigen::VectorXd eta_mean = ga.A * chain.mean;
    for (int i = 0; i < ga.layout.n_obs; ++i) {
        report.records[i].mean_mcmc = eta_mean[i];
    }
    for (int k = 0; k < ga.layout.m_star; ++k) {
        report.records[ga.layout.n_obs + k].mean_mcmc = chain.mean[k];
    }
    return report;
}

RunReport run_compare(const ModelConfig& config, const ObservationData& data,
                      const RunFlags& flags) {
    RunReport report;
    report.command = "compare";
    report.config_echo = config_echo(config, flags);

    const auto t0 = Clock::now();
    const GaussianApprox ga = fit_laplace(config.model, data, fit_options(flags));
    report.timing["fit_seconds"] = seconds_since(t0);
    report.convergence = fit_convergence(ga);
    report.records = base_records(ga);

    const CorrectionSet J = parse_correction_set(flags.correction_set, config.model, ga.layout);
    const auto t1 = Clock::now();
    const CorrectionResult corr =
        flags.exact_poisson
            ? vbc_correct_exact_poisson(ga, config.model, data, J, correction_options(flags))
            : vbc_correct(ga, config.model, data, J, correction_options(flags));
    report.timing["correct_seconds"] = seconds_since(t1);
    report.convergence["correction_iterations"] = corr.iterations;
    report.convergence["identity_residual"] = corr.identity_residual;

    SamplerOptions opt;
    opt.iterations = flags.mcmc_iters;
    opt.burn_in = flags.mcmc_burnin;
    opt.seed = flags.seed;
    const auto t2 = Clock::now();
    const ChainSummary chain = sample_posterior(ga, make_likelihood_data(config.model, data), opt);
    report.timing["mcmc_seconds"] = seconds_since(t2);
    report.convergence["acceptance_rate"] = chain.acceptance_rate;
    report.convergence["min_ess"] = chain.ess.minCoeff();

    const Eigen::VectorXd eta_mean = ga.A * chain.mean;
    for (int i = 0; i < ga.layout.n_obs; ++i) {
        report.records[i].mean_vbc = corr.mu_star_eta[i];
        report.records[i].mean_mcmc = eta_mean[i];
    }
    double mae_ga = 0.0, mae_vbc = 0.0;
    for (int k = 0; k < ga.layout.m_star; ++k) {
        report.records[ga.layout.n_obs + k].mean_vbc = corr.mu_star_effects[k];
        report.records[ga.layout.n_obs + k].mean_mcmc = chain.mean[k];
        mae_ga += std::abs(ga.mu_effects[k] - chain.mean[k]);
        mae_vbc += std::abs(corr.mu_star_effects[k] - chain.mean[k]);
    }
    report.metrics["mae_ga_vs_mcmc"] = mae_ga / ga.layout.m_star;
    report.metrics["mae_vbc_vs_mcmc"] = mae_vbc / ga.layout.m_star;
    return report;
}

}  // namespace vbc
