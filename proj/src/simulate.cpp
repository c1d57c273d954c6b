#include "vbc/simulate.hpp"

#include <cmath>

#include "vbc/errors.hpp"
#include "vbc/rng.hpp"

namespace vbc {

DataTable simulate_poisson_regression(int n, std::uint64_t seed) {
    if (n < 10) throw ConfigError("simulate: n must be at least 10");
    Rng rng(seed);
    Eigen::VectorXd x(n), y(n);
    for (int i = 0; i < n; ++i) x[i] = rng.normal();
    const double mean = x.mean();
    const double sd = std::sqrt((x.array() - mean).square().sum() / (n - 1));
    x = (x.array() - mean) / sd;
    for (int i = 0; i < n; ++i) {
        const double eta = -1.0 - 0.5 * x[i];
        y[i] = rng.poisson(std::exp(eta));
    }
    DataTable table;
    table.add_column("x", x);
    table.add_column("y", y);
    return table;
}

DataTable simulate_tokyo_binomial(int n, std::uint64_t seed) {
    if (n < 10) throw ConfigError("simulate: n must be at least 10");
    Rng rng(seed);
    Eigen::VectorXd day(n), y(n), trials(n);
    const double two_pi = 6.2831853071795864769;
    for (int i = 0; i < n; ++i) {
        day[i] = i + 1;
        const double t = two_pi * static_cast<double>(i) / static_cast<double>(n);
        // Rainy-season-like curve: probabilities roughly in [0.05, 0.6].
        const double alpha = -1.1 + 1.1 * std::sin(t - 1.2) + 0.5 * std::cos(2.0 * t + 0.4);
        const double p = 1.0 / (1.0 + std::exp(-alpha));
        const int m = (i + 1 == 60) ? 1 : 2;
        trials[i] = m;
        y[i] = rng.binomial(m, p);
    }
    DataTable table;
    table.add_column("day", day);
    table.add_column("y", y);
    table.add_column("ntrials", trials);
    return table;
}

DataTable simulate_scenario(const std::string& scenario, int n, std::uint64_t seed) {
    if (scenario == "poisson-regression") return simulate_poisson_regression(n, seed);
    if (scenario == "tokyo-binomial") return simulate_tokyo_binomial(n, seed);
    throw ConfigError("unknown scenario '" + scenario +
                      "' (expected poisson-regression or tokyo-binomial)");
}

}  // namespace vbc
