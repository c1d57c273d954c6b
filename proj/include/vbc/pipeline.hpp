#ifndef VBC_PIPELINE_HPP
#define VBC_PIPELINE_HPP

#include <cstdint>
#include <string>

#include "vbc/config.hpp"
#include "vbc/correction.hpp"
#include "vbc/mcmc.hpp"
#include "vbc/report.hpp"

namespace vbc {

// Command-level knobs, mirroring the CLI flags.
struct RunFlags {
    std::string correction_set = "fixed-effects";  // "none" | comma list, 1-based
    int ghq_nodes = 15;
    bool exact_poisson = false;
    std::int64_t mcmc_iters = 200000;
    std::int64_t mcmc_burnin = 20000;
    std::uint64_t seed = 1;
    double tol = 1e-8;
    int max_iter = 50;
    int correction_max_iter = 20;
    std::string dump_chain;  // sample: thinned-chain CSV path
    int dump_thin = 0;
};

CorrectionSet parse_correction_set(const std::string& spec, const ModelSpec& model,
                                   const LatentLayout& layout);

RunReport run_fit(const ModelConfig& config, const ObservationData& data,
                  const RunFlags& flags);
RunReport run_correct(const ModelConfig& config, const ObservationData& data,
                      const RunFlags& flags);
RunReport run_sample(const ModelConfig& config, const ObservationData& data,
                     const RunFlags& flags);
// Fit + correction + oracle, with mean-absolute-error metrics of each
// method against the oracle over the effect space.
RunReport run_compare(const ModelConfig& config, const ObservationData& data,
                      const RunFlags& flags);

}  // namespace vbc

#endif
