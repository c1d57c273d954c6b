#include <doctest.h>

#include <chrono>
#include <cmath>

#include <Eigen/Dense>

#include "support.hpp"
#include "vbc/correction.hpp"
#include "vbc/errors.hpp"
#include "vbc/simulate.hpp"

using namespace vbc;
using namespace vbc::testing;

namespace {

std::pair<ModelSpec, ObservationData> replicate_n50(std::uint64_t seed) {
    const DataTable table = simulate_poisson_regression(50, seed);
    return poisson_regression(table.column("x"), table.column("y"));
}

// Quadratic objective in lambda around the Laplace fit, evaluated directly.
double lambda_objective(const Eigen::VectorXd& lambda, const Eigen::VectorXd& B,
                        const Eigen::VectorXd& C, const Eigen::MatrixXd& M,
                        const SparseSymmetric& q_pi, const Eigen::VectorXd& mu,
                        const Eigen::MatrixXd& AM) {
    const Eigen::VectorXd d_eta = AM * lambda;
    const Eigen::VectorXd mu_new = mu + M * lambda;
    return B.dot(d_eta) + 0.5 * d_eta.dot(C.asDiagonal() * d_eta) +
           0.5 * q_pi.quadratic_form(mu_new);
}

}  // namespace

TEST_SUITE_BEGIN("correction");

TEST_CASE("default correction set") {
    SUBCASE("fixed effects when present") {
        ModelSpec model;
        model.effects = {intercept_effect(), slope_effect("x"),
                         indexed_effect(EffectKind::RW2, "f", 10, "t", 1.0)};
        LatentLayout layout;
        layout.n_obs = 5;
        layout.blocks = {{"intercept", EffectKind::FixedEffect, 0, 1},
                         {"x", EffectKind::FixedEffect, 1, 1},
                         {"f", EffectKind::RW2, 2, 10}};
        layout.m_star = 12;
        const CorrectionSet J = default_correction_set(model, layout);
        CHECK(J.indices == std::vector<int>{0, 1});
    }
    SUBCASE("whole spline block when no fixed effects") {
        ModelSpec model;
        model.effects = {indexed_effect(EffectKind::CyclicRW2, "day", 366, "day", 1.0)};
        LatentLayout layout;
        layout.n_obs = 366;
        layout.blocks = {{"day", EffectKind::CyclicRW2, 0, 366}};
        layout.m_star = 366;
        const CorrectionSet J = default_correction_set(model, layout);
        CHECK(J.p() == 366);
        CHECK(J.indices.front() == 0);
        CHECK(J.indices.back() == 365);
    }
    SUBCASE("iid-only model corrects the iid block") {
        ModelSpec model;
        model.effects = {indexed_effect(EffectKind::IID, "u", 4, "g", 1.0)};
        LatentLayout layout;
        layout.n_obs = 4;
        layout.blocks = {{"u", EffectKind::IID, 0, 4}};
        layout.m_star = 4;
        CHECK(default_correction_set(model, layout).p() == 4);
    }
}

TEST_CASE("solve_lambda") {
    SUBCASE("stationary input gives zero") {
        // B = 0 and mu in the null space of an intrinsic prior.
        LatentLayout layout;
        layout.blocks = {{"f", EffectKind::RW2, 0, 6}};
        layout.m_star = 6;
        ModelSpec model;
        model.effects = {indexed_effect(EffectKind::RW2, "f", 6, "t", 2.0)};
        const SparseSymmetric q_pi = assemble_prior_precision(model, layout);

        Eigen::MatrixXd M(6, 2);
        Rng rng(9);
        for (int i = 0; i < 6; ++i) {
            M(i, 0) = rng.normal();
            M(i, 1) = rng.normal();
        }
        Eigen::SparseMatrix<double> A(4, 6);
        A.insert(0, 0) = 1.0;
        A.insert(1, 2) = 1.0;
        A.insert(2, 4) = 0.5;
        A.insert(3, 5) = 1.0;
        const Eigen::VectorXd B = Eigen::VectorXd::Zero(4);
        const Eigen::VectorXd C = Eigen::VectorXd::Ones(4);
        const Eigen::VectorXd mu = Eigen::VectorXd::Constant(6, 3.7);  // constant: Q_pi mu = 0
        const Eigen::VectorXd lambda = solve_lambda(B, C, M, q_pi, mu, A);
        CHECK(lambda.cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("p=1 scalar closed form and golden-section search") {
        Rng rng(13);
        const int ms = 5, n = 7;
        Eigen::MatrixXd Ad(n, ms);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < ms; ++j) Ad(i, j) = rng.normal() * 0.5;
        const Eigen::SparseMatrix<double> A = Ad.sparseView();
        SparseSymmetric q_pi = SparseSymmetric::from_eigen(
            Eigen::SparseMatrix<double>(testing::random_spd(ms, rng).sparseView()));
        Eigen::MatrixXd M(ms, 1);
        Eigen::VectorXd B(n), C(n), mu(ms);
        for (int i = 0; i < ms; ++i) {
            M(i, 0) = rng.normal();
            mu[i] = rng.normal();
        }
        for (int i = 0; i < n; ++i) {
            B[i] = rng.normal();
            C[i] = 0.5 + rng.uniform();
        }
        const Eigen::VectorXd m = M.col(0);
        const Eigen::VectorXd Am = Ad * m;
        const double denom = Am.dot(C.asDiagonal() * Am) + q_pi.quadratic_form(m);
        const double numer = Am.dot(B) + m.dot(q_pi.multiply(mu));
        const double expected = -numer / denom;
        const Eigen::VectorXd lambda = solve_lambda(B, C, M, q_pi, mu, A);
        CHECK(lambda[0] == doctest::Approx(expected).epsilon(1e-12));

        // golden-section search over the scalar objective
        double lo = expected - 2.0, hi = expected + 2.0;
        const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
        auto f = [&](double l) {
            return lambda_objective(Eigen::VectorXd::Constant(1, l), B, C, M, q_pi, mu, Ad * M);
        };
        double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
        double fa = f(a), fb = f(b);
        for (int it = 0; it < 120; ++it) {
            if (fa < fb) {
                hi = b; b = a; fb = fa;
                a = hi - phi * (hi - lo); fa = f(a);
            } else {
                lo = a; a = b; fa = fb;
                b = lo + phi * (hi - lo); fb = f(b);
            }
        }
        CHECK(lambda[0] == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-7));
    }
    SUBCASE("small instance vs refined grid search") {
        Rng rng(29);
        const int ms = 6, n = 9, p = 2;
        Eigen::MatrixXd Ad(n, ms);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < ms; ++j) Ad(i, j) = 0.4 * rng.normal();
        SparseSymmetric q_pi = SparseSymmetric::from_eigen(
            Eigen::SparseMatrix<double>(testing::random_spd(ms, rng).sparseView()));
        Eigen::MatrixXd M(ms, p);
        Eigen::VectorXd B(n), C(n), mu(ms);
        for (int i = 0; i < ms; ++i) {
            mu[i] = rng.normal();
            for (int k = 0; k < p; ++k) M(i, k) = rng.normal();
        }
        for (int i = 0; i < n; ++i) {
            B[i] = rng.normal();
            C[i] = 0.5 + rng.uniform();
        }
        const Eigen::VectorXd lambda =
            solve_lambda(B, C, M, q_pi, mu, Eigen::SparseMatrix<double>(Ad.sparseView()));

        const Eigen::MatrixXd AM = Ad * M;
        Eigen::Vector2d best(0.0, 0.0);
        double half_width = 4.0;
        for (int pass = 0; pass < 10; ++pass) {
            Eigen::Vector2d center = best;
            double best_val = lambda_objective(best, B, C, M, q_pi, mu, AM);
            for (int i = -20; i <= 20; ++i) {
                for (int j = -20; j <= 20; ++j) {
                    Eigen::Vector2d cand = center;
                    cand[0] += half_width * i / 20.0;
                    cand[1] += half_width * j / 20.0;
                    const double v = lambda_objective(cand, B, C, M, q_pi, mu, AM);
                    if (v < best_val) {
                        best_val = v;
                        best = cand;
                    }
                }
            }
            half_width *= 0.12;
        }
        CHECK((lambda - best).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("gaussian likelihood needs no correction for any J") {
    Rng rng(41);
    const int n = 18;
    Eigen::VectorXd x(n), y(n), idx(n);
    for (int i = 0; i < n; ++i) {
        x[i] = rng.normal();
        y[i] = 0.5 - 0.3 * x[i] + rng.normal();
        idx[i] = 1 + (i % 6);
    }
    ModelSpec model;
    model.likelihood.family = Family::GaussianIdentity;
    model.likelihood.tau_obs = 2.0;
    model.effects = {intercept_effect(0.3), slope_effect("x", 0.3),
                     indexed_effect(EffectKind::IID, "u", 6, "g", 1.5)};
    model.n_obs = n;
    ObservationData data;
    data.y = y;
    data.covariates.add_column("x", x);
    data.covariates.add_column("g", idx);

    const GaussianApprox ga = fit_laplace(model, data);
    const std::vector<std::vector<int>> sets = {
        {0}, {0, 1}, {3, 5}, {0, 1, 2, 3, 4, 5, 6, 7}};
    for (const auto& indices : sets) {
        const CorrectionResult res = vbc_correct(ga, model, data, {indices});
        CHECK(res.lambda_star.cwiseAbs().maxCoeff() < 1e-8);
        CHECK((res.mu_star_effects - ga.mu_effects).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("single poisson observation moves toward the true posterior mean") {
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 3.0);
    const auto [model, data] = intercept_only(Family::PoissonLog, y, 1.0);
    const GaussianApprox ga = fit_laplace(model, data);
    const CorrectionResult res = vbc_correct(ga, model, data, {{0}});

    const double truth = posterior_mean_1d(make_likelihood_data(model, data), 1.0);
    CHECK(std::abs(res.mu_star_effects[0] - truth) < std::abs(ga.mu_effects[0] - truth));
    // the correction recovers most of the gap
    CHECK(std::abs(res.mu_star_effects[0] - truth) <
          0.2 * std::abs(ga.mu_effects[0] - truth));
}

TEST_CASE("exact poisson path agrees with quadrature and handles edge cases") {
    SUBCASE("n=50 replicate agreement") {
        const auto [model, data] = replicate_n50(42);
        const GaussianApprox ga = fit_laplace(model, data);
        const CorrectionSet J = default_correction_set(model, ga.layout);
        const CorrectionResult ghq = vbc_correct(ga, model, data, J);
        const CorrectionResult exact = vbc_correct_exact_poisson(ga, model, data, J);
        CHECK((ghq.lambda_star - exact.lambda_star).cwiseAbs().maxCoeff() < 1e-6);
    }
    SUBCASE("all-zero counts shift the intercept down") {
        const Eigen::VectorXd y = Eigen::VectorXd::Zero(8);
        const auto [model, data] = intercept_only(Family::PoissonLog, y, 2.0);
        const GaussianApprox ga = fit_laplace(model, data);
        const CorrectionResult res = vbc_correct_exact_poisson(ga, model, data, {{0}});
        CHECK(res.mu_star_effects[0] < ga.mu_effects[0]);
    }
    SUBCASE("wrong family is rejected") {
        Rng rng(3);
        Eigen::VectorXd y(5);
        for (int i = 0; i < 5; ++i) y[i] = rng.normal();
        const auto [model, data] = intercept_only(Family::GaussianIdentity, y, 1.0);
        const GaussianApprox ga = fit_laplace(model, data);
        CHECK_THROWS_AS(vbc_correct_exact_poisson(ga, model, data, {{0}}), ConfigError);
    }
}

TEST_CASE("mle-based correction") {
    SUBCASE("gaussian likelihood: nothing to correct") {
        Rng rng(7);
        Eigen::VectorXd y(12);
        for (int i = 0; i < 12; ++i) y[i] = 0.4 + rng.normal();
        const auto [model, data] = intercept_only(Family::GaussianIdentity, y, 1e-12);
        const GaussianApprox mle = mle_fit(model, data);
        const CorrectionResult res = vbc_from_mle(mle, model, data, {{0}});
        CHECK(res.lambda_star.cwiseAbs().maxCoeff() < 1e-8);
    }
    SUBCASE("informative prior pulls the poisson intercept toward zero") {
        Eigen::VectorXd y(20);
        for (int i = 0; i < 20; ++i) y[i] = (i % 2 == 0) ? 1.0 : 3.0;
        const auto [model, data] = intercept_only(Family::PoissonLog, y, 1.0);
        const GaussianApprox mle = mle_fit(model, data);
        const double mle_estimate = std::log(2.0);
        CHECK(mle.mu_effects[0] == doctest::Approx(mle_estimate).epsilon(1e-9));
        const CorrectionResult res = vbc_from_mle(mle, model, data, {{0}});
        CHECK(res.mu_star_effects[0] < mle_estimate);
        CHECK(res.mu_star_effects[0] > 0.0);
        const double truth = posterior_mean_1d(make_likelihood_data(model, data), 1.0);
        CHECK(std::abs(res.mu_star_effects[0] - truth) < 5e-3);
    }
    SUBCASE("weak-prior limit matches vbc_correct") {
        const auto [model_, data_] = replicate_n50(8);
        ModelSpec model = model_;
        const ObservationData& data = data_;
        for (auto& e : model.effects) e.prior_precision = 1e-8;
        const GaussianApprox ga = fit_laplace(model, data);
        const GaussianApprox mle = mle_fit(model, data);
        const CorrectionSet J = default_correction_set(model, ga.layout);
        const CorrectionResult from_fit = vbc_correct(ga, model, data, J);
        const CorrectionResult from_mle = vbc_from_mle(mle, model, data, J);
        CHECK((from_fit.mu_star_effects - from_mle.mu_star_effects).cwiseAbs().maxCoeff() <
              1e-5);
    }
}

TEST_CASE("kld of gaussians") {
    SUBCASE("identical arguments give zero") {
        SparseSymmetric q(3);
        q.add(0, 0, 2.0);
        q.add(1, 1, 1.0);
        q.add(2, 2, 0.5);
        q.add(0, 1, 0.2);
        const Eigen::VectorXd mu = (Eigen::VectorXd(3) << 1, -1, 2).finished();
        CHECK(kld_gaussian(mu, q, mu, q) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("one-dimensional closed form") {
        SparseSymmetric q1(1), q0(1);
        q1.add(0, 0, 1.0);
        q0.add(0, 0, 0.5);
        const double kld = kld_gaussian(Eigen::VectorXd::Constant(1, 1.0), q1,
                                        Eigen::VectorXd::Zero(1), q0);
        CHECK(kld == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-12));
    }
    SUBCASE("nonnegative on random PD instances") {
        Rng rng(55);
        for (int t = 0; t < 100; ++t) {
            const int m = 2 + static_cast<int>(rng.uniform() * 5);
            const SparseSymmetric q1 = SparseSymmetric::from_eigen(
                Eigen::SparseMatrix<double>(random_spd(m, rng).sparseView()));
            const SparseSymmetric q0 = SparseSymmetric::from_eigen(
                Eigen::SparseMatrix<double>(random_spd(m, rng).sparseView()));
            Eigen::VectorXd mu1(m), mu0(m);
            for (int i = 0; i < m; ++i) {
                mu1[i] = rng.normal();
                mu0[i] = rng.normal();
            }
            CHECK(kld_gaussian(mu1, q1, mu0, q0) >= -1e-10);
        }
    }
    SUBCASE("non-PD rejected") {
        SparseSymmetric bad(2);
        bad.add(0, 0, 1.0);
        bad.add(1, 1, -1.0);
        SparseSymmetric ok(2);
        ok.add(0, 0, 1.0);
        ok.add(1, 1, 1.0);
        CHECK_THROWS_AS(kld_gaussian(Eigen::VectorXd::Zero(2), bad,
                                     Eigen::VectorXd::Zero(2), ok),
                        NotPositiveDefiniteError);
    }
}

TEST_CASE("objective trace and structural identities on the n=50 replicate") {
    const auto [model, data] = replicate_n50(17);
    const GaussianApprox ga = fit_laplace(model, data);
    const CorrectionResult res =
        vbc_correct(ga, model, data, default_correction_set(model, ga.layout));
    CHECK(res.converged);
    CHECK(res.identity_residual < 1e-9);
    for (std::size_t i = 2; i < res.objective_trace.size(); ++i) {
        CHECK(res.objective_trace[i] <= res.objective_trace[i - 1] + 1e-10);
    }
    // first update must improve on lambda = 0 for this convex objective
    CHECK(res.objective_trace[1] <= res.objective_trace[0] + 1e-10);
    // delta = M lambda by construction
    const Eigen::MatrixXd M = selected_inverse_columns(*ga.factor, res.J);
    CHECK((res.delta_effects - M * res.lambda_star).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("nesting: enlarging J never worsens the objective") {
    const auto [model, data] = replicate_n50(23);
    const GaussianApprox ga = fit_laplace(model, data);
    const CorrectionResult r1 = vbc_correct(ga, model, data, {{0}});
    const CorrectionResult r12 = vbc_correct(ga, model, data, {{0, 1}});
    CHECK(r12.objective_trace.back() <= r1.objective_trace.back() + 1e-10);
}

TEST_CASE("solve_lambda rejects collinear directions unless asked for min-norm") {
    // Two identical correction columns make the p x p system singular.
    Eigen::MatrixXd M(3, 2);
    M << 1, 1, 2, 2, -1, -1;
    Eigen::MatrixXd Ad = Eigen::MatrixXd::Identity(3, 3);
    SparseSymmetric q_pi(3);
    for (int i = 0; i < 3; ++i) q_pi.add(i, i, 1.0);
    const Eigen::VectorXd B = (Eigen::VectorXd(3) << 1, 0, -1).finished();
    const Eigen::VectorXd C = Eigen::VectorXd::Ones(3);
    const Eigen::VectorXd mu = Eigen::VectorXd::Zero(3);
    const Eigen::SparseMatrix<double> A = Ad.sparseView();
    CHECK_THROWS_AS(solve_lambda(B, C, M, q_pi, mu, A), NumericalError);
    bool deficient = false;
    const Eigen::VectorXd lambda = solve_lambda(B, C, M, q_pi, mu, A, &deficient);
    CHECK(deficient);
    // minimum-norm solution still satisfies the normal equations
    const Eigen::MatrixXd H = M.transpose() * (C.asDiagonal() * M) +
                              M.transpose() * (q_pi.to_eigen() * M);
    const Eigen::VectorXd rhs = -(M.transpose() * B);
    CHECK((H * lambda - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("correction set validation") {
    const auto [model, data] = replicate_n50(4);
    const GaussianApprox ga = fit_laplace(model, data);
    CHECK_THROWS_AS(vbc_correct(ga, model, data, {{0, 0}}), ConfigError);
    CHECK_THROWS_AS(vbc_correct(ga, model, data, {{2}}), ConfigError);
    CHECK_THROWS_AS(vbc_correct(ga, model, data, {{}}), ConfigError);
}

TEST_CASE("cost grows linearly in m* at fixed p") {
    // RW2 spline with one observation per node, p = 2 fixed effects.
    auto build = [](int size) {
        ModelSpec model;
        model.likelihood.family = Family::PoissonLog;
        model.effects = {intercept_effect(), slope_effect("x"),
                         indexed_effect(EffectKind::RW2, "f", size, "t", 10.0)};
        model.n_obs = size;
        ObservationData data;
        Rng rng(1000 + size);
        Eigen::VectorXd x(size), t(size), y(size);
        for (int i = 0; i < size; ++i) {
            x[i] = rng.normal();
            t[i] = i + 1;
            y[i] = rng.poisson(std::exp(-0.5 + 0.2 * x[i]));
        }
        data.y = y;
        data.covariates.add_column("x", x);
        data.covariates.add_column("t", t);
        return std::make_pair(model, data);
    };
    auto time_correction = [](const ModelSpec& model, const ObservationData& data) {
        const GaussianApprox ga = fit_laplace(model, data);
        const CorrectionSet J = default_correction_set(model, ga.layout);
        double best = 1e300;
        for (int rep = 0; rep < 5; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            const CorrectionResult res = vbc_correct(ga, model, data, J);
            const double dt = std::chrono::duration<double>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
            CHECK(res.iterations >= 1);
            best = std::min(best, dt);
        }
        return best;
    };
    const auto [m1, d1] = build(20000);
    const auto [m2, d2] = build(40000);
    const double t1 = time_correction(m1, d1);
    const double t2 = time_correction(m2, d2);
    CHECK(t2 <= 2.5 * t1);
}

TEST_SUITE_END();
