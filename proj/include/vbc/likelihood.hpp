#ifndef VBC_LIKELIHOOD_HPP
#define VBC_LIKELIHOOD_HPP

#include <Eigen/Core>

namespace vbc {

enum class Family {
    PoissonLog,
    BinomialLogit,
    GaussianIdentity,
};

const char* family_name(Family f);

// Per-observation log-likelihood g(eta) = log f(y | eta) and its first two
// derivatives in the linear predictor. `aux` carries the per-observation
// fixed parameter: the trial count for BinomialLogit, the observation
// precision for GaussianIdentity; it is ignored for PoissonLog.
double loglik(Family f, double y, double eta, double aux);
double dloglik(Family f, double y, double eta, double aux);
double d2loglik(Family f, double y, double eta, double aux);

// Observation block of a model, flattened for the numeric kernels.
struct LikelihoodData {
    Family family = Family::PoissonLog;
    Eigen::VectorXd y;
    Eigen::VectorXd aux;  // trials / tau_obs per observation, 1.0 for Poisson

    Eigen::Index n() const { return y.size(); }
    double loglik_sum(const Eigen::VectorXd& eta) const;
};

// Second-order expansion of the log-likelihood around eta0:
//   g(eta) ~= a + b'eta - (1/2) eta' diag(c) eta     (summed over observations)
// with b_i = g'(eta0_i) - g''(eta0_i) eta0_i and c_i = -g''(eta0_i).
// The gradient term keeps the expansion valid away from per-observation
// modes (Poisson zero counts have no finite mode); at a mode it reduces to
// b_i = -g'' eta0_i.
struct TaylorCoefficients {
    double a = 0.0;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
    Eigen::VectorXd expansion_point;
};

TaylorCoefficients taylor_coefficients(const LikelihoodData& lik,
                                       const Eigen::VectorXd& eta0);

}  // namespace vbc

#endif
