// Command-line front end: fit / correct / sample / compare / simulate.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "vbc/csv.hpp"
#include "vbc/errors.hpp"
#include "vbc/pipeline.hpp"
#include "vbc/simulate.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string data_path;
    std::string out_prefix;
};

void add_common(CLI::App* cmd, CommonArgs& args, vbc::RunFlags& flags) {
    cmd->add_option("--config", args.config_path, "model configuration file (JSON)")
        ->required();
    cmd->add_option("--data", args.data_path, "data file (CSV with header)")->required();
    cmd->add_option("--out", args.out_prefix,
                    "output prefix; writes <out>.ndjson and <out>.csv");
    cmd->add_option("--seed", flags.seed, "RNG seed");
    cmd->add_option("--tol", flags.tol, "convergence tolerance");
    cmd->add_option("--max-iter", flags.max_iter, "maximum Newton iterations");
}

void emit(const vbc::RunReport& report, const CommonArgs& args) {
    if (!args.out_prefix.empty()) {
        vbc::write_report_ndjson(args.out_prefix + ".ndjson", report);
        vbc::write_report_csv(args.out_prefix + ".csv", report);
    }
    std::cout << vbc::format_comparison_table(report);
    for (const auto& [key, value] : report.metrics) {
        std::cout << key << " = " << value << "\n";
    }
    for (const auto& [key, value] : report.timing) {
        std::cout << key << " = " << value << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Laplace-method fits of latent Gaussian models with a low-rank "
                 "variational Bayes mean correction"};
    app.require_subcommand(1);

    CommonArgs args;
    vbc::RunFlags flags;

    CLI::App* fit = app.add_subcommand("fit", "Gaussian approximation only");
    add_common(fit, args, flags);
    fit->add_option("--ghq-nodes", flags.ghq_nodes, "Gauss-Hermite order (echoed)");

    CLI::App* correct = app.add_subcommand("correct", "fit plus mean correction");
    add_common(correct, args, flags);
    correct->add_option("--correction-set", flags.correction_set,
                        "'fixed-effects', 'none', or 1-based effect indices");
    correct->add_option("--ghq-nodes", flags.ghq_nodes, "Gauss-Hermite order");
    correct->add_flag("--exact-poisson", flags.exact_poisson,
                      "closed-form Poisson objective instead of quadrature");
    correct->add_option("--correction-max-iter", flags.correction_max_iter,
                        "maximum correction iterations");

    CLI::App* sample = app.add_subcommand("sample", "MCMC oracle over the effects");
    add_common(sample, args, flags);
    sample->add_option("--mcmc-iters", flags.mcmc_iters, "total iterations");
    sample->add_option("--mcmc-burnin", flags.mcmc_burnin, "burn-in iterations");
    sample->add_option("--dump-chain", flags.dump_chain, "write thinned states to this CSV");
    sample->add_option("--dump-thin", flags.dump_thin, "keep every k-th post-burn-in state");

    CLI::App* compare =
        app.add_subcommand("compare", "fit, correction and oracle with MAE metrics");
    add_common(compare, args, flags);
    compare->add_option("--correction-set", flags.correction_set,
                        "'fixed-effects' or 1-based effect indices");
    compare->add_option("--ghq-nodes", flags.ghq_nodes, "Gauss-Hermite order");
    compare->add_flag("--exact-poisson", flags.exact_poisson,
                      "closed-form Poisson objective instead of quadrature");
    compare->add_option("--mcmc-iters", flags.mcmc_iters, "total iterations");
    compare->add_option("--mcmc-burnin", flags.mcmc_burnin, "burn-in iterations");

    CLI::App* simulate = app.add_subcommand("simulate", "write a synthetic dataset");
    std::string scenario;
    int sim_n = 50;
    std::string sim_out;
    simulate->add_option("--scenario", scenario, "poisson-regression | tokyo-binomial")
        ->required();
    simulate->add_option("--n", sim_n, "number of observations");
    simulate->add_option("--seed", flags.seed, "RNG seed");
    simulate->add_option("--out", sim_out, "output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (simulate->parsed()) {
            vbc::write_csv(sim_out, vbc::simulate_scenario(scenario, sim_n, flags.seed));
            std::cout << "wrote " << sim_out << "\n";
            return 0;
        }
        vbc::ModelConfig config = vbc::parse_model_config(args.config_path);
        const vbc::DataTable table = vbc::read_csv(args.data_path);
        const vbc::ObservationData data = vbc::bind_data(config, table);
        vbc::RunReport report;
        if (fit->parsed()) {
            report = vbc::run_fit(config, data, flags);
        } else if (correct->parsed()) {
            report = vbc::run_correct(config, data, flags);
        } else if (sample->parsed()) {
            report = vbc::run_sample(config, data, flags);
        } else {
            report = vbc::run_compare(config, data, flags);
        }
        emit(report, args);
        return 0;
    } catch (const vbc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const vbc::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
