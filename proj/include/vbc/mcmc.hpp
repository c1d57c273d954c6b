#ifndef VBC_MCMC_HPP
#define VBC_MCMC_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vbc/laplace.hpp"

namespace vbc {

struct SamplerOptions {
    std::int64_t iterations = 200000;
    std::int64_t burn_in = 20000;
    std::uint64_t seed = 1;
    int dump_thin = 0;        // > 0: write every k-th post-burn-in state
    std::string dump_path;    // CSV, one row per kept state
};

// Posterior summary over the effect space from one chain.
struct ChainSummary {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;
    Eigen::VectorXd ess;      // batch-means effective sample sizes
    double acceptance_rate = 0.0;
    double proposal_scale = 0.0;
    std::uint64_t seed = 0;
    std::int64_t iterations = 0;
    std::int64_t burn_in = 0;
};

// Random-walk Metropolis over the effects with proposal
// N(current, s^2 Q^{-1}), Q from the Laplace fit; s is adapted toward
// acceptance 0.25 during burn-in and then frozen. Deterministic per seed.
ChainSummary sample_posterior(const ModelSpec& model, const ObservationData& data,
                              const SamplerOptions& options);
ChainSummary sample_posterior(const GaussianApprox& ga, const LikelihoodData& lik,
                              const SamplerOptions& options);

// Combines chains over the same target (distinct seeds) into one summary.
ChainSummary pool_chains(const std::vector<ChainSummary>& chains);

}  // namespace vbc

#endif
