#include "vbc/laplace.hpp"

#include <cmath>
#include <string>

#include "vbc/errors.hpp"

namespace vbc {

namespace {

// A' diag(c) A with the pattern fixed across iterations.
Eigen::SparseMatrix<double> weighted_gram(const Eigen::SparseMatrix<double>& A,
                                          const Eigen::VectorXd& c) {
    return Eigen::SparseMatrix<double>(A.transpose()) * c.asDiagonal() * A;
}

double objective(const LikelihoodData& lik, const SparseSymmetric& prior,
                 const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& x) {
    return lik.loglik_sum(A * x) - 0.5 * prior.quadratic_form(x);
}

std::string block_hint(const LatentLayout& layout, int effect_index) {
    const auto [b, within] = layout.block_of_effect(effect_index);
    return "block '" + layout.blocks[b].name + "' (offset " + std::to_string(within) + ")";
}

GaussianApprox fit_core(const ModelSpec& model, const ObservationData& data,
                        SparseSymmetric prior, const FitOptions& options, bool is_mle) {
    GaussianApprox ga;
    ga.layout = build_layout(model, data);
    ga.A = predictor_map(model, data, ga.layout);
    ga.prior = std::move(prior);

    const LikelihoodData lik = make_likelihood_data(model, data);
    const Eigen::SparseMatrix<double> Qpi = ga.prior.to_eigen();
    const int m_star = ga.layout.m_star;

    Eigen::VectorXd mu = options.initial_effects
                             ? *options.initial_effects
                             : Eigen::VectorXd::Zero(m_star);
    if (mu.size() != m_star) {
        throw NumericalError("fit: warm start has wrong dimension");
    }

    std::shared_ptr<CholeskyHandle> handle;
    auto factor_q = [&](const Eigen::SparseMatrix<double>& Q) {
        try {
            if (!handle) {
                handle = std::make_shared<CholeskyHandle>(CholeskyHandle::factorize(Q));
            } else {
                handle->refactorize(Q);
            }
        } catch (const NotPositiveDefiniteError& e) {
            const std::string what =
                is_mle ? std::string("mle_fit: singular likelihood Hessian, deficient direction at ")
                       : std::string("fit_laplace: precision not positive definite at ");
            throw NotPositiveDefiniteError(what + block_hint(ga.layout, e.pivot_index),
                                           e.pivot_index);
        }
    };

    auto gradient_inf = [&](const Eigen::VectorXd& x) {
        const Eigen::VectorXd eta = ga.A * x;
        Eigen::VectorXd score(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            score[i] = dloglik(lik.family, lik.y[i], eta[i], lik.aux[i]);
        }
        return (ga.A.transpose() * score - ga.prior.multiply(x)).cwiseAbs().maxCoeff();
    };

    double current_obj = objective(lik, ga.prior, ga.A, mu);
    bool converged = false;
    int iterations = 0;
    double final_step = 0.0;

    for (int iter = 1; iter <= options.max_iter; ++iter) {
        const Eigen::VectorXd eta0 = ga.A * mu;
        const TaylorCoefficients tc = taylor_coefficients(lik, eta0);
        const Eigen::SparseMatrix<double> Q = Qpi + weighted_gram(ga.A, tc.c);
        factor_q(Q);
        const Eigen::VectorXd rhs = ga.A.transpose() * tc.b;
        const Eigen::VectorXd proposal = handle->solve(rhs);
        Eigen::VectorXd step = proposal - mu;

        double t = 1.0;
        Eigen::VectorXd candidate = proposal;
        double cand_obj = objective(lik, ga.prior, ga.A, candidate);
        while (cand_obj < current_obj && t > 1.0 / 1024.0) {
            t *= 0.5;
            candidate = mu + t * step;
            cand_obj = objective(lik, ga.prior, ga.A, candidate);
        }
        mu = candidate;
        current_obj = cand_obj;
        iterations = iter;
        final_step = (t * step).cwiseAbs().maxCoeff();
        if (final_step < options.tol || gradient_inf(mu) < options.tol) {
            converged = true;
            break;
        }
    }

    // Consistency pass: re-expand at the converged point so that the stored
    // (Q, b) and mu satisfy Q mu = A' b by construction.
    const Eigen::VectorXd eta0 = ga.A * mu;
    const TaylorCoefficients tc = taylor_coefficients(lik, eta0);
    ga.Q = Qpi + weighted_gram(ga.A, tc.c);
    factor_q(ga.Q);
    const Eigen::VectorXd rhs = ga.A.transpose() * tc.b;
    mu = handle->solve(rhs);

    ga.factor = handle;
    ga.mu_effects = mu;
    ga.mu_eta = ga.A * mu;
    ga.S_eta = predictor_variances(*handle, ga.A).cwiseSqrt();
    if ((ga.S_eta.array() <= 0.0).any()) {
        throw NumericalError("fit: nonpositive predictor variance");
    }
    ga.b_converged = tc.b;
    ga.c_converged = tc.c;
    ga.iterations = iterations;
    ga.converged = converged;
    ga.final_step = final_step;
    ga.newton_residual = (ga.Q * mu - rhs).cwiseAbs().maxCoeff();

    Eigen::VectorXd score(ga.mu_eta.size());
    for (Eigen::Index i = 0; i < score.size(); ++i) {
        score[i] = dloglik(lik.family, lik.y[i], ga.mu_eta[i], lik.aux[i]);
    }
    ga.gradient_norm =
        (ga.A.transpose() * score - ga.prior.multiply(mu)).cwiseAbs().maxCoeff();
    return ga;
}

}  // namespace

GaussianApprox fit_laplace(const ModelSpec& model, const ObservationData& data,
                           const FitOptions& options) {
    const LatentLayout layout = build_layout(model, data);
    return fit_core(model, data, assemble_prior_precision(model, layout), options,
                    /*is_mle=*/false);
}

GaussianApprox mle_fit(const ModelSpec& model, const ObservationData& data,
                       const FitOptions& options) {
    const LatentLayout layout = build_layout(model, data);
    return fit_core(model, data, SparseSymmetric(layout.m_star), options, /*is_mle=*/true);
}

}  // namespace vbc
