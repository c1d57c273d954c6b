#ifndef VBC_QUAD_HPP
#define VBC_QUAD_HPP

#include <Eigen/Core>

#include "vbc/laplace.hpp"
#include "vbc/likelihood.hpp"

namespace vbc {

// Gauss-Hermite rule in the physicists' convention (weight e^{-x^2}).
struct GHQRule {
    int order = 0;
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

// Nodes and weights from the eigendecomposition of the Hermite Jacobi
// matrix, symmetrized so that odd moments vanish exactly.
GHQRule ghq_rule(int order);

// E[-log l] under independent N(mu_i + delta_i, S_i^2) marginals:
//   sum_i (1/sqrt(pi)) sum_r w_r (-g(mu_i + delta_i + sqrt(2) S_i x_r)).
double expected_negloglik(const Eigen::VectorXd& mu_eta, const Eigen::VectorXd& S_eta,
                          const Eigen::VectorXd& delta_eta, const LikelihoodData& lik,
                          const GHQRule& rule);
double expected_negloglik(const GaussianApprox& ga, const Eigen::VectorXd& delta_eta,
                          const LikelihoodData& lik, const GHQRule& rule);

// Quadratic expansion of the expected negative log-likelihood in the mean
// shift delta: value A, gradient B, curvature C (per observation).
struct LikelihoodCurvature {
    double A = 0.0;
    Eigen::VectorXd B;
    Eigen::VectorXd C;
};

// B and C are the first and second derivatives of expected_negloglik in
// delta_i at delta = 0, via Gaussian integration by parts:
//   B_i = (-1/sqrt(pi)) sum_r w_r (sqrt(2) x_r / S_i)       g(mu_i + sqrt(2) S_i x_r)
//   C_i = (-1/sqrt(pi)) sum_r w_r (2 x_r^2 - 1) / S_i^2     g(mu_i + sqrt(2) S_i x_r)
LikelihoodCurvature curvature_coefficients(const Eigen::VectorXd& mu_eta,
                                           const Eigen::VectorXd& S_eta,
                                           const LikelihoodData& lik, const GHQRule& rule);
LikelihoodCurvature curvature_coefficients(const GaussianApprox& ga, const LikelihoodData& lik,
                                           const GHQRule& rule);

}  // namespace vbc

#endif
