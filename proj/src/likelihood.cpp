#include "vbc/likelihood.hpp"

#include <cmath>
#include <string>

#include "vbc/errors.hpp"

namespace vbc {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

void check_eta(double eta) {
    if (!std::isfinite(eta)) {
        throw NumericalError("loglik: nonfinite linear predictor");
    }
}

// log(1 + e^eta) without overflow.
double log1pexp(double eta) {
    return std::max(eta, 0.0) + std::log1p(std::exp(-std::abs(eta)));
}

double logistic(double eta) {
    if (eta >= 0.0) {
        return 1.0 / (1.0 + std::exp(-eta));
    }
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

}  // namespace

const char* family_name(Family f) {
    switch (f) {
        case Family::PoissonLog: return "poisson_log";
        case Family::BinomialLogit: return "binomial_logit";
        case Family::GaussianIdentity: return "gaussian_identity";
    }
    return "?";
}

double loglik(Family f, double y, double eta, double aux) {
    check_eta(eta);
    switch (f) {
        case Family::PoissonLog: {
            if (y < 0.0) throw NumericalError("poisson: negative count");
            return y * eta - std::exp(eta) - std::lgamma(y + 1.0);
        }
        case Family::BinomialLogit: {
            const double n = aux;
            if (y < 0.0 || y > n) throw NumericalError("binomial: y outside [0, n]");
            const double logC = std::lgamma(n + 1.0) - std::lgamma(y + 1.0) -
                                std::lgamma(n - y + 1.0);
            return y * eta - n * log1pexp(eta) + logC;
        }
        case Family::GaussianIdentity: {
            const double tau = aux;
            const double r = y - eta;
            return -0.5 * tau * r * r + 0.5 * (std::log(tau) - kLogTwoPi);
        }
    }
    return 0.0;
}

double dloglik(Family f, double y, double eta, double aux) {
    check_eta(eta);
    switch (f) {
        case Family::PoissonLog:
            return y - std::exp(eta);
        case Family::BinomialLogit:
            return y - aux * logistic(eta);
        case Family::GaussianIdentity:
            return aux * (y - eta);
    }
    return 0.0;
}

double d2loglik(Family f, double /*y*/, double eta, double aux) {
    check_eta(eta);
    switch (f) {
        case Family::PoissonLog:
            return -std::exp(eta);
        case Family::BinomialLogit: {
            const double p = logistic(eta);
            return -aux * p * (1.0 - p);
        }
        case Family::GaussianIdentity:
            return -aux;
    }
    return 0.0;
}

double LikelihoodData::loglik_sum(const Eigen::VectorXd& eta) const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        s += loglik(family, y[i], eta[i], aux[i]);
    }
    return s;
}

TaylorCoefficients taylor_coefficients(const LikelihoodData& lik,
                                       const Eigen::VectorXd& eta0) {
    const Eigen::Index n = lik.y.size();
    if (eta0.size() != n) {
        throw NumericalError("taylor_coefficients: expansion point length mismatch");
    }
    TaylorCoefficients tc;
    tc.b.resize(n);
    tc.c.resize(n);
    tc.expansion_point = eta0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double g = loglik(lik.family, lik.y[i], eta0[i], lik.aux[i]);
        const double g1 = dloglik(lik.family, lik.y[i], eta0[i], lik.aux[i]);
        const double g2 = d2loglik(lik.family, lik.y[i], eta0[i], lik.aux[i]);
        tc.b[i] = g1 - g2 * eta0[i];
        tc.c[i] = -g2;
        tc.a += g - g1 * eta0[i] + 0.5 * g2 * eta0[i] * eta0[i];
        if (!std::isfinite(tc.b[i]) || !std::isfinite(tc.c[i])) {
            throw NumericalError("taylor_coefficients: nonfinite coefficient at observation " +
                                 std::to_string(i));
        }
    }
    return tc;
}

}  // namespace vbc
