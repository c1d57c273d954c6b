#include "vbc/correction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "vbc/errors.hpp"

namespace vbc {

CorrectionSet default_correction_set(const ModelSpec&, const LatentLayout& layout) {
    if (layout.m_star == 0) throw ConfigError("empty latent field");
    CorrectionSet J;
    for (std::size_t b = 0; b < layout.blocks.size(); ++b) {
        if (layout.blocks[b].kind == EffectKind::FixedEffect) {
            J.indices.push_back(layout.blocks[b].offset);
        }
    }
    if (!J.indices.empty()) return J;

    const LatentLayout::Block* smallest = &layout.blocks.front();
    for (const auto& blk : layout.blocks) {
        if (blk.size < smallest->size) smallest = &blk;
    }
    for (int i = 0; i < smallest->size; ++i) J.indices.push_back(smallest->offset + i);
    return J;
}

Eigen::VectorXd solve_lambda(const Eigen::VectorXd& B, const Eigen::VectorXd& C,
                             const Eigen::MatrixXd& M, const SparseSymmetric& Q_pi,
                             const Eigen::VectorXd& mu_effects,
                             const Eigen::SparseMatrix<double>& A,
                             bool* rank_deficient) {
    const Eigen::Index p = M.cols();
    const Eigen::MatrixXd AM = A * M;
    Eigen::MatrixXd QpiM(M.rows(), p);
    for (Eigen::Index k = 0; k < p; ++k) QpiM.col(k) = Q_pi.multiply(M.col(k));

    const Eigen::MatrixXd H =
        AM.transpose() * C.asDiagonal() * AM + M.transpose() * QpiM;
    const Eigen::VectorXd rhs =
        -(AM.transpose() * B + QpiM.transpose() * mu_effects);

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(H);
    const bool deficient = cod.rank() < p;
    if (rank_deficient) {
        *rank_deficient = deficient;
    } else if (deficient) {
        throw NumericalError("solve_lambda: singular correction system (collinear directions)");
    }
    return cod.solve(rhs);
}

namespace {

constexpr double kExpCap = 700.0;

struct CurvatureEval {
    double value = 0.0;  // expected negative log-likelihood at the current mean
    Eigen::VectorXd B;
    Eigen::VectorXd C;
    int capped = 0;
};

// GHQ value/gradient/curvature in one pass over the node evaluations.
CurvatureEval ghq_eval(const Eigen::VectorXd& mu_eta, const Eigen::VectorXd& S_eta,
                       const LikelihoodData& lik, const GHQRule& rule) {
    static constexpr double kSqrtPi = 1.7724538509055160273;
    static constexpr double kSqrt2 = 1.4142135623730950488;
    CurvatureEval out;
    const Eigen::Index n = lik.n();
    out.B.resize(n);
    out.C.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s = S_eta[i];
        if (s < 1e-10) {
            throw NumericalError("vbc: degenerate marginal sd at observation " +
                                 std::to_string(i));
        }
        double v = 0.0, b = 0.0, c = 0.0;
        for (int r = 0; r < rule.order; ++r) {
            const double x = rule.nodes[r];
            const double g =
                loglik(lik.family, lik.y[i], mu_eta[i] + kSqrt2 * s * x, lik.aux[i]);
            const double wg = rule.weights[r] * g;
            v += wg;
            b += wg * kSqrt2 * x / s;
            c += wg * (2.0 * x * x - 1.0) / (s * s);
        }
        out.value -= v / kSqrtPi;
        out.B[i] = -b / kSqrtPi;
        out.C[i] = -c / kSqrtPi;
    }
    return out;
}

// Closed-form Poisson expectation: E[-g] = exp(mu + S^2/2) - y mu + log(y!).
CurvatureEval exact_poisson_eval(const Eigen::VectorXd& mu_eta, const Eigen::VectorXd& S_eta,
                                 const LikelihoodData& lik, double log_factorial_sum) {
    CurvatureEval out;
    const Eigen::Index n = lik.n();
    out.B.resize(n);
    out.C.resize(n);
    out.value = log_factorial_sum;
    for (Eigen::Index i = 0; i < n; ++i) {
        double expo = mu_eta[i] + 0.5 * S_eta[i] * S_eta[i];
        if (expo > kExpCap) {
            expo = kExpCap;
            ++out.capped;
        }
        const double e = std::exp(expo);
        out.value += e - lik.y[i] * mu_eta[i];
        out.B[i] = e - lik.y[i];
        out.C[i] = e;
    }
    return out;
}

enum class Mode { GaussHermite, ExactPoisson };

CorrectionResult correct_core(const GaussianApprox& ga, const SparseSymmetric& Q_pi,
                              const LikelihoodData& lik, const CorrectionSet& J,
                              const CorrectionOptions& options, Mode mode) {
    const int m_star = ga.layout.m_star;
    const int p = J.p();
    if (p < 1 || p > m_star) {
        throw ConfigError("correction set must have between 1 and m* indices");
    }
    {
        std::vector<int> sorted = J.indices;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw ConfigError("correction set has duplicate indices");
        }
        if (sorted.front() < 0 || sorted.back() >= m_star) {
            throw ConfigError("correction set index out of range");
        }
    }

    const Eigen::MatrixXd M = selected_inverse_columns(*ga.factor, J.indices);
    const Eigen::MatrixXd AM = ga.A * M;
    Eigen::MatrixXd QpiM(m_star, p);
    for (int k = 0; k < p; ++k) QpiM.col(k) = Q_pi.multiply(M.col(k));
    const Eigen::MatrixXd MtQpiM = M.transpose() * QpiM;

    const GHQRule rule =
        mode == Mode::GaussHermite ? ghq_rule(options.ghq_order) : GHQRule{};
    double log_factorial_sum = 0.0;
    if (mode == Mode::ExactPoisson) {
        for (Eigen::Index i = 0; i < lik.n(); ++i) {
            log_factorial_sum += std::lgamma(lik.y[i] + 1.0);
        }
    }
    auto evaluate = [&](const Eigen::VectorXd& mu_eta) {
        return mode == Mode::GaussHermite
                   ? ghq_eval(mu_eta, ga.S_eta, lik, rule)
                   : exact_poisson_eval(mu_eta, ga.S_eta, lik, log_factorial_sum);
    };
    auto prior_term = [&](const Eigen::VectorXd& mu_eff) {
        return 0.5 * Q_pi.quadratic_form(mu_eff);
    };

    CorrectionResult res;
    res.J = J.indices;
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd mu_eff = ga.mu_effects;
    Eigen::VectorXd mu_eta = ga.mu_eta;

    CurvatureEval eval = evaluate(mu_eta);
    res.capped_exponentials += eval.capped;
    double objective = eval.value + prior_term(mu_eff);
    res.objective_trace.push_back(objective);

    int consecutive_increases = 0;
    for (int iter = 1; iter <= options.max_iter; ++iter) {
        const Eigen::MatrixXd H =
            AM.transpose() * eval.C.asDiagonal() * AM + MtQpiM;
        const Eigen::VectorXd rhs =
            -(AM.transpose() * eval.B + QpiM.transpose() * mu_eff);
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(H);
        if (cod.rank() < p) res.rank_deficient_system = true;
        const Eigen::VectorXd dlambda = cod.solve(rhs);

        double t = 1.0;
        Eigen::VectorXd cand_lambda, cand_eff, cand_eta;
        CurvatureEval cand_eval;
        double cand_obj = std::numeric_limits<double>::infinity();
        for (int halving = 0; halving <= 30; ++halving) {
            cand_lambda = lambda + t * dlambda;
            cand_eff = ga.mu_effects + M * cand_lambda;
            cand_eta = ga.mu_eta + AM * cand_lambda;
            cand_eval = evaluate(cand_eta);
            cand_obj = cand_eval.value + prior_term(cand_eff);
            if (cand_obj <= objective + 1e-12 * std::abs(objective)) break;
            t *= 0.5;
        }

        if (cand_obj > objective + 1e-10 * std::max(1.0, std::abs(objective))) {
            if (++consecutive_increases >= 2) {
                std::ostringstream trace;
                trace.precision(12);
                for (double v : res.objective_trace) trace << ' ' << v;
                throw NumericalError("vbc: objective increased twice, aborting; trace:" +
                                     trace.str());
            }
        } else {
            consecutive_increases = 0;
        }

        lambda = cand_lambda;
        mu_eff = cand_eff;
        mu_eta = cand_eta;
        eval = cand_eval;
        res.capped_exponentials += eval.capped;
        objective = cand_obj;
        res.objective_trace.push_back(objective);
        res.iterations = iter;

        if ((t * dlambda).cwiseAbs().maxCoeff() < options.tol) {
            res.converged = true;
            break;
        }
    }

    res.lambda_star = lambda;
    res.delta_effects = M * lambda;
    res.delta_eta = AM * lambda;
    res.mu_star_effects = ga.mu_effects + res.delta_effects;
    res.mu_star_eta = ga.mu_eta + res.delta_eta;

    // The corrected mean must satisfy Q mu* = A'b + pad_J(lambda*).
    Eigen::VectorXd image = ga.A.transpose() * ga.b_converged;
    for (int k = 0; k < p; ++k) image[J.indices[k]] += lambda[k];
    res.identity_residual = (ga.Q * res.mu_star_effects - image).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, image.cwiseAbs().maxCoeff());
    if (res.identity_residual > 1e-9 * scale) {
        throw NumericalError("vbc: corrected-mean identity residual " +
                             std::to_string(res.identity_residual) + " exceeds tolerance");
    }
    return res;
}

}  // namespace

CorrectionResult vbc_correct(const GaussianApprox& ga, const ModelSpec& model,
                             const ObservationData& data, const CorrectionSet& J,
                             const CorrectionOptions& options) {
    return correct_core(ga, ga.prior, make_likelihood_data(model, data), J, options,
                        Mode::GaussHermite);
}

CorrectionResult vbc_correct_exact_poisson(const GaussianApprox& ga, const ModelSpec& model,
                                           const ObservationData& data, const CorrectionSet& J,
                                           const CorrectionOptions& options) {
    if (model.likelihood.family != Family::PoissonLog) {
        throw ConfigError("exact-poisson correction requires the Poisson family");
    }
    return correct_core(ga, ga.prior, make_likelihood_data(model, data), J, options,
                        Mode::ExactPoisson);
}

CorrectionResult vbc_from_mle(const GaussianApprox& mle, const ModelSpec& model,
                              const ObservationData& data, const CorrectionSet& J,
                              const CorrectionOptions& options) {
    const SparseSymmetric Q_pi = assemble_prior_precision(model, mle.layout);
    return correct_core(mle, Q_pi, make_likelihood_data(model, data), J, options,
                        Mode::GaussHermite);
}

double kld_gaussian(const Eigen::VectorXd& mu1, const SparseSymmetric& Q1,
                    const Eigen::VectorXd& mu0, const SparseSymmetric& Q0) {
    const int m = Q1.dim();
    if (Q0.dim() != m || mu1.size() != m || mu0.size() != m) {
        throw NumericalError("kld_gaussian: dimension mismatch");
    }
    const CholeskyHandle f1 = factorize(Q1);
    const CholeskyHandle f0 = factorize(Q0);

    // tr(Q0 Q1^{-1}) through the Q1^{-1} columns hit by Q0's entries.
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(m, m);
    const Eigen::MatrixXd inv1 = f1.solve(identity);
    double trace = 0.0;
    for (const auto& [rc, v] : Q0.entries()) {
        trace += v * inv1(rc.second, rc.first);
        if (rc.first != rc.second) trace += v * inv1(rc.first, rc.second);
    }

    const Eigen::VectorXd d = mu1 - mu0;
    return 0.5 * (trace + Q0.quadratic_form(d) - m + f1.log_determinant() -
                  f0.log_determinant());
}

}  // namespace vbc
