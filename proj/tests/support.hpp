// Shared helpers for the test suites: model builders and independent
// oracles (dense augmented-field pipeline, 1-d quadrature posterior means,
// random SPD instances). Everything here is deliberately dense and simple.
#ifndef VBC_TESTS_SUPPORT_HPP
#define VBC_TESTS_SUPPORT_HPP

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "vbc/likelihood.hpp"
#include "vbc/model.hpp"
#include "vbc/rng.hpp"

namespace vbc::testing {

inline EffectSpec intercept_effect(double tau = 0.001) {
    EffectSpec e;
    e.kind = EffectKind::FixedEffect;
    e.name = "intercept";
    e.prior_precision = tau;
    return e;
}

inline EffectSpec slope_effect(const std::string& column, double tau = 0.001) {
    EffectSpec e;
    e.kind = EffectKind::FixedEffect;
    e.name = column;
    e.covariate = column;
    e.prior_precision = tau;
    return e;
}

inline EffectSpec indexed_effect(EffectKind kind, const std::string& name, int size,
                                 const std::string& index_column, double tau) {
    EffectSpec e;
    e.kind = kind;
    e.name = name;
    e.size = size;
    e.index_column = index_column;
    e.prior_precision = tau;
    return e;
}

// Poisson regression y ~ Poisson(exp(b0 + b1 x)) on given vectors.
inline std::pair<ModelSpec, ObservationData> poisson_regression(const Eigen::VectorXd& x,
                                                                const Eigen::VectorXd& y,
                                                                double tau_fixed = 0.001) {
    ModelSpec model;
    model.likelihood.family = Family::PoissonLog;
    model.effects = {intercept_effect(tau_fixed), slope_effect("x", tau_fixed)};
    model.n_obs = static_cast<int>(y.size());
    ObservationData data;
    data.y = y;
    data.covariates.add_column("x", x);
    return {model, data};
}

inline std::pair<ModelSpec, ObservationData> intercept_only(Family family,
                                                            const Eigen::VectorXd& y,
                                                            double tau_prior,
                                                            double tau_obs = 1.0,
                                                            const Eigen::VectorXd* trials = nullptr) {
    ModelSpec model;
    model.likelihood.family = family;
    model.likelihood.tau_obs = tau_obs;
    model.effects = {intercept_effect(tau_prior)};
    model.n_obs = static_cast<int>(y.size());
    ObservationData data;
    data.y = y;
    data.covariates.add_column("one", Eigen::VectorXd::Ones(y.size()));
    if (trials) data.trials = *trials;
    return {model, data};
}

inline Eigen::MatrixXd random_spd(int n, Rng& rng, double offdiag = 0.3) {
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        L(i, i) = 0.5 + rng.uniform();
        for (int j = 0; j < i; ++j) {
            L(i, j) = offdiag * (2.0 * rng.uniform() - 1.0);
        }
    }
    return L * L.transpose();
}

// Posterior mean of a shared linear predictor eta under prior N(0, 1/tau0),
// by Simpson quadrature of the exact 1-d posterior.
inline double posterior_mean_1d(const LikelihoodData& lik, double tau0, double lo = -12.0,
                                double hi = 12.0, int intervals = 40000) {
    const double h = (hi - lo) / intervals;
    auto logpost = [&](double eta) {
        double s = -0.5 * tau0 * eta * eta;
        for (Eigen::Index i = 0; i < lik.n(); ++i) {
            s += loglik(lik.family, lik.y[i], eta, lik.aux[i]);
        }
        return s;
    };
    double peak = -1e300;
    for (int k = 0; k <= intervals; ++k) peak = std::max(peak, logpost(lo + k * h));
    double z = 0.0, zm = 0.0;
    for (int k = 0; k <= intervals; ++k) {
        const double eta = lo + k * h;
        const double w = (k == 0 || k == intervals) ? 1.0 : (k % 2 ? 4.0 : 2.0);
        const double f = w * std::exp(logpost(eta) - peak);
        z += f;
        zm += f * eta;
    }
    return zm / z;
}

// Dense augmented-field pipeline: the latent field is (eta, effects) with
// eta | effects ~ N(A effects, kappa^{-1} I). Serves as the independent
// representation oracle for the effect-space implementation.
struct AugmentedFit {
    Eigen::VectorXd mu;       // length n + m*
    Eigen::MatrixXd sigma;    // posterior covariance
    Eigen::MatrixXd q_prior;  // augmented prior precision
    Eigen::MatrixXd q_post;
    Eigen::VectorXd b;        // converged Taylor b over eta
    int n = 0;
};

inline AugmentedFit fit_augmented_dense(const LikelihoodData& lik,
                                        const Eigen::MatrixXd& A,
                                        const Eigen::MatrixXd& q_pi_effects,
                                        double kappa = std::exp(14.0), int max_iter = 80,
                                        double tol = 1e-10) {
    const int n = static_cast<int>(A.rows());
    const int ms = static_cast<int>(A.cols());
    const int m = n + ms;
    AugmentedFit fit;
    fit.n = n;
    fit.q_prior = Eigen::MatrixXd::Zero(m, m);
    fit.q_prior.topLeftCorner(n, n) = kappa * Eigen::MatrixXd::Identity(n, n);
    fit.q_prior.topRightCorner(n, ms) = -kappa * A;
    fit.q_prior.bottomLeftCorner(ms, n) = -kappa * A.transpose();
    fit.q_prior.bottomRightCorner(ms, ms) = q_pi_effects + kappa * A.transpose() * A;

    Eigen::VectorXd mu = Eigen::VectorXd::Zero(m);
    for (int iter = 0; iter < max_iter; ++iter) {
        const Eigen::VectorXd eta0 = mu.head(n);
        const TaylorCoefficients tc = taylor_coefficients(lik, eta0);
        Eigen::MatrixXd q = fit.q_prior;
        q.diagonal().head(n) += tc.c;
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
        rhs.head(n) = tc.b;
        const Eigen::VectorXd mu_new = q.ldlt().solve(rhs);
        const double step = (mu_new - mu).cwiseAbs().maxCoeff();
        mu = mu_new;
        fit.q_post = q;
        fit.b = tc.b;
        if (step < tol) break;
    }
    fit.mu = mu;
    fit.sigma = fit.q_post.ldlt().solve(Eigen::MatrixXd::Identity(m, m));
    return fit;
}

// Augmented-field mean correction with corrections at effect nodes J
// (effect-space indices); returns the cumulative lambda and the delta over
// the full augmented field.
struct AugmentedCorrection {
    Eigen::VectorXd lambda;
    Eigen::VectorXd delta;  // length n + m*
};

inline AugmentedCorrection correct_augmented_dense(const AugmentedFit& fit,
                                                   const LikelihoodData& lik,
                                                   const std::vector<int>& j_effects,
                                                   int ghq_order, int max_iter = 40,
                                                   double tol = 1e-10);

}  // namespace vbc::testing

#include "vbc/quad.hpp"

namespace vbc::testing {

inline AugmentedCorrection correct_augmented_dense(const AugmentedFit& fit,
                                                   const LikelihoodData& lik,
                                                   const std::vector<int>& j_effects,
                                                   int ghq_order, int max_iter, double tol) {
    const int n = fit.n;
    const int p = static_cast<int>(j_effects.size());
    const GHQRule rule = ghq_rule(ghq_order);
    const Eigen::VectorXd S = fit.sigma.diagonal().head(n).cwiseSqrt();

    Eigen::MatrixXd M(fit.mu.size(), p);
    for (int k = 0; k < p; ++k) M.col(k) = fit.sigma.col(n + j_effects[k]);
    const Eigen::MatrixXd Mn = M.topRows(n);
    const Eigen::MatrixXd QpM = fit.q_prior * M;

    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd mu = fit.mu;
    for (int iter = 0; iter < max_iter; ++iter) {
        const LikelihoodCurvature curv = curvature_coefficients(mu.head(n), S, lik, rule);
        const Eigen::MatrixXd H = Mn.transpose() * curv.C.asDiagonal() * Mn +
                                  M.transpose() * QpM;
        const Eigen::VectorXd rhs = -(Mn.transpose() * curv.B + QpM.transpose() * mu);
        const Eigen::VectorXd dl = H.ldlt().solve(rhs);
        lambda += dl;
        mu = fit.mu + M * lambda;
        if (dl.cwiseAbs().maxCoeff() < tol) break;
    }
    return {lambda, M * lambda};
}

}  // namespace vbc::testing

#endif
