#ifndef VBC_ERRORS_HPP
#define VBC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace vbc {

// Bad user input: config files, data files, inconsistent dimensions.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Failures of the numerics: non-PD matrices, divergence, nonfinite values.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

class NotPositiveDefiniteError : public NumericalError {
public:
    NotPositiveDefiniteError(const std::string& what, int pivot)
        : NumericalError(what), pivot_index(pivot) {}
    // Index (in the matrix ordering handed to the factorization) of the
    // first nonpositive pivot.
    int pivot_index;
};

}  // namespace vbc

#endif
