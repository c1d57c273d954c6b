#ifndef VBC_CORRECTION_HPP
#define VBC_CORRECTION_HPP

#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "vbc/laplace.hpp"
#include "vbc/quad.hpp"

namespace vbc {

// Effect-space indices receiving explicit corrections lambda.
struct CorrectionSet {
    std::vector<int> indices;

    int p() const { return static_cast<int>(indices.size()); }
};

// All fixed-effect indices; the lowest-dimensional block when a model has
// no fixed effects.
CorrectionSet default_correction_set(const ModelSpec& model, const LatentLayout& layout);

struct CorrectionOptions {
    double tol = 1e-8;
    int max_iter = 20;
    int ghq_order = 15;
};

struct CorrectionResult {
    std::vector<int> J;
    Eigen::VectorXd lambda_star;       // length p
    Eigen::VectorXd delta_effects;     // M lambda_star
    Eigen::VectorXd delta_eta;         // A M lambda_star
    Eigen::VectorXd mu_star_effects;
    Eigen::VectorXd mu_star_eta;
    std::vector<double> objective_trace;  // variational objective per iteration
    int iterations = 0;
    bool converged = false;
    double identity_residual = 0.0;    // ||Q mu* - (A'b + pad_J lambda*)||_inf
    int capped_exponentials = 0;       // exact-Poisson overflow guard hits
    bool rank_deficient_system = false;
};

// Exact minimizer of the quadratic objective in lambda around the current
// mean: solves
//   [(AM)' diag(C) (AM) + M' Q_pi M] lambda = -[(AM)' B + M' Q_pi mu]
// where M holds the Q^{-1} columns at J. Rank-deficient systems get the
// minimum-norm solution and set *rank_deficient.
Eigen::VectorXd solve_lambda(const Eigen::VectorXd& B, const Eigen::VectorXd& C,
                             const Eigen::MatrixXd& M, const SparseSymmetric& Q_pi,
                             const Eigen::VectorXd& mu_effects,
                             const Eigen::SparseMatrix<double>& A,
                             bool* rank_deficient = nullptr);

// Low-rank variational mean correction: refresh (B, C) at the current
// corrected mean (S fixed at the Laplace value), solve for the lambda
// increment, accumulate, stop when the increment is below tol. Full-rank
// behavior is the special case J = all effect indices.
CorrectionResult vbc_correct(const GaussianApprox& ga, const ModelSpec& model,
                             const ObservationData& data, const CorrectionSet& J,
                             const CorrectionOptions& options = {});

// Poisson-only variant optimizing the closed-form expected log-likelihood
// sum_i exp(mu_i + delta_i + S_i^2/2) - y_i (mu_i + delta_i) by Newton
// iterations in lambda.
CorrectionResult vbc_correct_exact_poisson(const GaussianApprox& ga, const ModelSpec& model,
                                           const ObservationData& data, const CorrectionSet& J,
                                           const CorrectionOptions& options = {});

// Correction of a maximum likelihood fit: same machinery, with the model's
// prior entering only through the correction objective.
CorrectionResult vbc_from_mle(const GaussianApprox& mle, const ModelSpec& model,
                              const ObservationData& data, const CorrectionSet& J,
                              const CorrectionOptions& options = {});

// KLD[N(mu1, Q1^{-1}) || N(mu0, Q0^{-1})]; both precisions must be PD.
double kld_gaussian(const Eigen::VectorXd& mu1, const SparseSymmetric& Q1,
                    const Eigen::VectorXd& mu0, const SparseSymmetric& Q0);

}  // namespace vbc

#endif
