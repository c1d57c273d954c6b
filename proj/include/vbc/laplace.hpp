#ifndef VBC_LAPLACE_HPP
#define VBC_LAPLACE_HPP

#include <memory>
#include <optional>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "vbc/gmrf.hpp"
#include "vbc/likelihood.hpp"
#include "vbc/model.hpp"

namespace vbc {

struct FitOptions {
    double tol = 1e-8;
    int max_iter = 50;
    std::optional<Eigen::VectorXd> initial_effects;  // warm start
};

// Gaussian approximation N(mu, Q^{-1}) to the conditional posterior of the
// latent effects, with the predictor-space projection mu_eta = A mu and
// S_eta_i = sqrt((A Q^{-1} A')_ii). Immutable after the fit; the
// factorization handle is read-shareable.
struct GaussianApprox {
    LatentLayout layout;
    Eigen::SparseMatrix<double> A;     // n x m*
    SparseSymmetric prior;             // Q_pi used by the fit (zero for the MLE)
    Eigen::SparseMatrix<double> Q;     // effect-space precision at convergence
    std::shared_ptr<const CholeskyHandle> factor;

    Eigen::VectorXd mu_effects;
    Eigen::VectorXd mu_eta;
    Eigen::VectorXd S_eta;
    Eigen::VectorXd b_converged;       // Taylor b at the final expansion point
    Eigen::VectorXd c_converged;

    int iterations = 0;
    bool converged = false;
    double final_step = 0.0;           // ||last Newton step||_inf
    double gradient_norm = 0.0;        // ||A'g'(A mu) - Q_pi mu||_inf at mu
    double newton_residual = 0.0;      // ||Q mu - A' b||_inf
};

// Iterated Taylor linearization: eta0 = A mu; (b, c) at eta0;
// Q = Q_pi + A' diag(c) A; solve Q mu = A' b; repeat until the step is
// below tol. Undamped Newton with a halving line search that only engages
// when the objective would decrease.
GaussianApprox fit_laplace(const ModelSpec& model, const ObservationData& data,
                           const FitOptions& options = {});

// Same iteration with Q_pi = 0: the asymptotic N(mu_MLE, Q^{-1}) with Q the
// negative log-likelihood Hessian over the effects.
GaussianApprox mle_fit(const ModelSpec& model, const ObservationData& data,
                       const FitOptions& options = {});

}  // namespace vbc

#endif
