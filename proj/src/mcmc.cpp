#include "vbc/mcmc.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "vbc/errors.hpp"
#include "vbc/rng.hpp"

namespace vbc {

namespace {

// Log-likelihood sum without the eta-independent constants (they cancel in
// the Metropolis ratio). Written with Eigen array expressions so the exp and
// log calls vectorize in the chain's hot loop.
double loglik_kernel(const LikelihoodData& lik, const Eigen::VectorXd& eta) {
    const auto e = eta.array();
    switch (lik.family) {
        case Family::PoissonLog:
            return (lik.y.array() * e - e.exp()).sum();
        case Family::BinomialLogit:
            return (lik.y.array() * e -
                    lik.aux.array() * (e.max(0.0) + (1.0 + (-e.abs()).exp()).log()))
                .sum();
        case Family::GaussianIdentity:
            return -0.5 * (lik.aux.array() * (lik.y.array() - e).square()).sum();
    }
    return 0.0;
}

}  // namespace

ChainSummary sample_posterior(const GaussianApprox& ga, const LikelihoodData& lik,
                              const SamplerOptions& options) {
    if (options.iterations <= options.burn_in || options.burn_in < 0) {
        throw ConfigError("sampler needs iterations > burn_in >= 0");
    }
    const int d = ga.layout.m_star;
    const Eigen::SparseMatrix<double> Qpi = ga.prior.to_eigen();
    const std::int64_t n_keep = options.iterations - options.burn_in;

    Rng rng(options.seed);
    Eigen::VectorXd x = ga.mu_effects;
    Eigen::VectorXd eta(ga.A.rows()), z(d), scratch(d), step(d), proposal(d),
        prop_eta(ga.A.rows()), qx(d), delta(d);
    eta.noalias() = ga.A * x;
    qx.noalias() = Qpi * x;
    double logpost = loglik_kernel(lik, eta) - 0.5 * x.dot(qx);

    double scale = 2.38 / std::sqrt(static_cast<double>(d));
    std::vector<double> scale_trace{scale};
    std::int64_t window_accepts = 0, window_size = 0;
    std::int64_t kept_accepts = 0;

    // Post burn-in accumulators: Welford moments plus batch sums for ESS.
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd m2 = Eigen::VectorXd::Zero(d);
    const int n_batches = 100;
    const std::int64_t batch_len = std::max<std::int64_t>(1, n_keep / n_batches);
    Eigen::MatrixXd batch_means = Eigen::MatrixXd::Zero(d, n_batches);
    Eigen::VectorXd batch_sum = Eigen::VectorXd::Zero(d);

    std::ofstream dump;
    if (options.dump_thin > 0) {
        dump.open(options.dump_path);
        if (!dump) throw ConfigError("cannot open chain dump file " + options.dump_path);
        dump.precision(10);
        for (int j = 0; j < d; ++j) dump << (j ? "," : "") << "x" << j + 1;
        dump << "\n";
    }

    std::int64_t kept = 0;
    for (std::int64_t it = 0; it < options.iterations; ++it) {
        for (int j = 0; j < d; ++j) z[j] = rng.normal();
        ga.factor->unwhiten(z, scratch, step);
        proposal = x + scale * step;
        prop_eta.noalias() = ga.A * proposal;
        qx.noalias() = Qpi * proposal;
        const double prop_logpost = loglik_kernel(lik, prop_eta) - 0.5 * proposal.dot(qx);
        const bool accept = std::log(rng.uniform()) < prop_logpost - logpost;
        if (accept) {
            x.swap(proposal);
            logpost = prop_logpost;
        }

        if (it < options.burn_in) {
            window_accepts += accept;
            if (++window_size == 100) {
                scale *= std::exp(0.7 * (static_cast<double>(window_accepts) / 100.0 - 0.25));
                scale_trace.push_back(scale);
                window_accepts = 0;
                window_size = 0;
            }
            continue;
        }

        kept_accepts += accept;
        ++kept;
        delta = x - mean;
        mean += delta / static_cast<double>(kept);
        m2.array() += delta.array() * (x - mean).array();
        batch_sum += x;
        if (kept % batch_len == 0) {
            const std::int64_t b = kept / batch_len - 1;
            if (b < n_batches) batch_means.col(b) = batch_sum / static_cast<double>(batch_len);
            batch_sum.setZero();
        }
        if (options.dump_thin > 0 && (kept - 1) % options.dump_thin == 0) {
            for (int j = 0; j < d; ++j) dump << (j ? "," : "") << x[j];
            dump << "\n";
        }
    }

    const double acc_rate = static_cast<double>(kept_accepts) / static_cast<double>(n_keep);
    if (kept_accepts == 0) {
        std::ostringstream oss;
        oss << "sampler: zero acceptance after adaptation; proposal scale trace:";
        for (double s : scale_trace) oss << ' ' << s;
        throw NumericalError(oss.str());
    }

    ChainSummary out;
    out.mean = mean;
    out.sd = (m2 / static_cast<double>(kept - 1)).cwiseSqrt();
    out.ess.resize(d);
    const std::int64_t used_batches = std::min<std::int64_t>(n_batches, kept / batch_len);
    for (int j = 0; j < d; ++j) {
        double ess = static_cast<double>(kept);
        if (used_batches >= 2) {
            const auto row = batch_means.row(j).head(used_batches);
            const double bm_mean = row.mean();
            const double bm_var = (row.array() - bm_mean).square().sum() /
                                  static_cast<double>(used_batches - 1);
            const double var = m2[j] / static_cast<double>(kept - 1);
            if (bm_var > 0.0 && var > 0.0) {
                ess = static_cast<double>(kept) * var /
                      (static_cast<double>(batch_len) * bm_var);
            }
        }
        out.ess[j] = std::clamp(ess, 1.0, static_cast<double>(kept));
    }
    out.acceptance_rate = acc_rate;
    out.proposal_scale = scale;
    out.seed = options.seed;
    out.iterations = options.iterations;
    out.burn_in = options.burn_in;
    return out;
}

ChainSummary sample_posterior(const ModelSpec& model, const ObservationData& data,
                              const SamplerOptions& options) {
    const GaussianApprox ga = fit_laplace(model, data);
    return sample_posterior(ga, make_likelihood_data(model, data), options);
}

ChainSummary pool_chains(const std::vector<ChainSummary>& chains) {
    if (chains.empty()) throw NumericalError("pool_chains: no chains");
    const Eigen::Index d = chains.front().mean.size();
    double total_n = 0.0;
    for (const auto& c : chains) {
        if (c.mean.size() != d) throw NumericalError("pool_chains: dimension mismatch");
        total_n += static_cast<double>(c.iterations - c.burn_in);
    }
    ChainSummary out;
    out.mean = Eigen::VectorXd::Zero(d);
    out.sd = Eigen::VectorXd::Zero(d);
    out.ess = Eigen::VectorXd::Zero(d);
    for (const auto& c : chains) {
        const double w = static_cast<double>(c.iterations - c.burn_in) / total_n;
        out.mean += w * c.mean;
        out.ess += c.ess;
        out.acceptance_rate += c.acceptance_rate / static_cast<double>(chains.size());
    }
    // Law of total variance across chains.
    for (const auto& c : chains) {
        const double w = static_cast<double>(c.iterations - c.burn_in) / total_n;
        out.sd.array() += w * (c.sd.array().square() +
                               (c.mean - out.mean).array().square());
    }
    out.sd = out.sd.cwiseSqrt();
    out.seed = chains.front().seed;
    out.iterations = chains.front().iterations * static_cast<std::int64_t>(chains.size());
    out.burn_in = chains.front().burn_in * static_cast<std::int64_t>(chains.size());
    out.proposal_scale = chains.front().proposal_scale;
    return out;
}

}  // namespace vbc
