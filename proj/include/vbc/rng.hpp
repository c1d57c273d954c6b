#ifndef VBC_RNG_HPP
#define VBC_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace vbc {

// Uniforms and Box-Muller normals on top of mt19937_64. Draw sequences are
// fixed by the seed alone, not by the standard library's distribution
// implementations, so simulated datasets and chains reproduce everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() {  // (0, 1)
        return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double theta = 6.2831853071795864769 * uniform();
        cached_ = r * std::sin(theta);
        have_cached_ = true;
        return r * std::cos(theta);
    }

    // Knuth's product-of-uniforms sampler; intended for small rates.
    int poisson(double rate) {
        const double limit = std::exp(-rate);
        int k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k - 1;
    }

    int binomial(int trials, double prob) {
        int successes = 0;
        for (int t = 0; t < trials; ++t) successes += uniform() < prob;
        return successes;
    }

private:
    std::mt19937_64 gen_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace vbc

#endif
