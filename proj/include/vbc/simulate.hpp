#ifndef VBC_SIMULATE_HPP
#define VBC_SIMULATE_HPP

#include <cstdint>
#include <string>

#include "vbc/model.hpp"

namespace vbc {

// Low-count Poisson regression y ~ Poisson(exp(b0 + b1 x)) with b0 = -1,
// b1 = -0.5 and a standardized continuous covariate. Columns: x, y.
DataTable simulate_poisson_regression(int n, std::uint64_t seed);

// Binomial counts over n days of a smooth periodic probability curve on a
// torus, two trials per day except day 60 with one. Columns: day, y, ntrials.
DataTable simulate_tokyo_binomial(int n, std::uint64_t seed);

// Dispatch by scenario name ("poisson-regression" | "tokyo-binomial").
DataTable simulate_scenario(const std::string& scenario, int n, std::uint64_t seed);

}  // namespace vbc

#endif
