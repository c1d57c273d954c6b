#include "vbc/quad.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "vbc/errors.hpp"

namespace vbc {

namespace {

constexpr double kSqrtPi = 1.7724538509055160273;
constexpr double kSqrt2 = 1.4142135623730950488;

}  // namespace

GHQRule ghq_rule(int order) {
    if (order < 1 || order > 100) {
        throw NumericalError("ghq_rule: order must be in [1, 100]");
    }
    GHQRule rule;
    rule.order = order;
    if (order == 1) {
        rule.nodes = Eigen::VectorXd::Zero(1);
        rule.weights = Eigen::VectorXd::Constant(1, kSqrtPi);
        return rule;
    }

    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        const double beta = std::sqrt(0.5 * k);
        jacobi(k, k - 1) = beta;
        jacobi(k - 1, k) = beta;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    rule.nodes = eig.eigenvalues();
    rule.weights.resize(order);
    for (int k = 0; k < order; ++k) {
        const double v0 = eig.eigenvectors()(0, k);
        rule.weights[k] = kSqrtPi * v0 * v0;
    }

    // Enforce the symmetry of the rule exactly.
    for (int k = 0; k < order / 2; ++k) {
        const int mirror = order - 1 - k;
        const double x = 0.5 * (rule.nodes[mirror] - rule.nodes[k]);
        const double w = 0.5 * (rule.weights[k] + rule.weights[mirror]);
        rule.nodes[k] = -x;
        rule.nodes[mirror] = x;
        rule.weights[k] = w;
        rule.weights[mirror] = w;
    }
    if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
    return rule;
}

double expected_negloglik(const Eigen::VectorXd& mu_eta, const Eigen::VectorXd& S_eta,
                          const Eigen::VectorXd& delta_eta, const LikelihoodData& lik,
                          const GHQRule& rule) {
    const Eigen::Index n = lik.n();
    if (mu_eta.size() != n || S_eta.size() != n || delta_eta.size() != n) {
        throw NumericalError("expected_negloglik: length mismatch");
    }
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double center = mu_eta[i] + delta_eta[i];
        double acc = 0.0;
        for (int r = 0; r < rule.order; ++r) {
            acc += rule.weights[r] *
                   loglik(lik.family, lik.y[i], center + kSqrt2 * S_eta[i] * rule.nodes[r],
                          lik.aux[i]);
        }
        if (!std::isfinite(acc)) {
            throw NumericalError("expected_negloglik: nonfinite value at observation " +
                                 std::to_string(i));
        }
        total -= acc / kSqrtPi;
    }
    return total;
}

double expected_negloglik(const GaussianApprox& ga, const Eigen::VectorXd& delta_eta,
                          const LikelihoodData& lik, const GHQRule& rule) {
    return expected_negloglik(ga.mu_eta, ga.S_eta, delta_eta, lik, rule);
}

LikelihoodCurvature curvature_coefficients(const Eigen::VectorXd& mu_eta,
                                           const Eigen::VectorXd& S_eta,
                                           const LikelihoodData& lik, const GHQRule& rule) {
    const Eigen::Index n = lik.n();
    if (mu_eta.size() != n || S_eta.size() != n) {
        throw NumericalError("curvature_coefficients: length mismatch");
    }
    LikelihoodCurvature out;
    out.B.resize(n);
    out.C.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s = S_eta[i];
        if (s < 1e-10) {
            throw NumericalError("curvature_coefficients: degenerate marginal sd at observation " +
                                 std::to_string(i));
        }
        double v = 0.0, b = 0.0, c = 0.0;
        for (int r = 0; r < rule.order; ++r) {
            const double x = rule.nodes[r];
            const double g = loglik(lik.family, lik.y[i], mu_eta[i] + kSqrt2 * s * x, lik.aux[i]);
            const double wg = rule.weights[r] * g;
            v += wg;
            b += wg * kSqrt2 * x / s;
            c += wg * (2.0 * x * x - 1.0) / (s * s);
        }
        out.A -= v / kSqrtPi;
        out.B[i] = -b / kSqrtPi;
        out.C[i] = -c / kSqrtPi;
        if (!std::isfinite(out.B[i]) || !std::isfinite(out.C[i])) {
            throw NumericalError("curvature_coefficients: nonfinite value at observation " +
                                 std::to_string(i));
        }
    }
    return out;
}

LikelihoodCurvature curvature_coefficients(const GaussianApprox& ga, const LikelihoodData& lik,
                                           const GHQRule& rule) {
    return curvature_coefficients(ga.mu_eta, ga.S_eta, lik, rule);
}

}  // namespace vbc
